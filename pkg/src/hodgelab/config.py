"""Experiment configuration: INI-style text, parsed into :class:`ExperimentConfig`.

Layout::

    [experiment]
    kind = wedge
    seed = 0
    n_schedule = 4, 8, 16, 32
    exponents = 4/3, 4/3

    [grid]
    shape = 512x512
    lengths = 1, 1

    [factor.alpha]          # one section per factor, in file order
    kind = bubble
    x0 = 0.3, 0.55

    [tests]
    placements = 0.3, 0.55; 0.7, 0.2

    [tolerances]
    gap = 1e-3

Numbers accept fractions such as ``4/3``. Keys are canonicalized (sorted,
whitespace-normalized) before hashing so that equivalent files hash alike.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError
from .torus import TorusGrid

__all__ = ["ExperimentConfig", "parse_config", "load_config", "parse_number", "parse_vector",
           "parse_grid_spec", "format_config"]


def parse_number(text: str) -> float:
    text = str(text).strip()
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_vector(text: str) -> tuple:
    text = str(text).strip()
    if not text:
        return ()
    return tuple(parse_number(t) for t in text.replace(" ", "").split(",") if t)


def parse_grid_spec(text: str) -> tuple:
    """``"512x512"`` or ``"64x64x64"`` to a shape tuple."""
    try:
        shape = tuple(int(t) for t in str(text).lower().replace(" ", "").split("x"))
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {text!r}") from exc
    if len(shape) not in (2, 3):
        raise ConfigError(f"grid must be 2- or 3-dimensional, got {text!r}")
    return shape


def _value(text: str) -> Any:
    """Best-effort typing of a config value."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("", "none"):
        return None
    if ";" in t:
        return tuple(parse_vector(part) for part in t.split(";") if part.strip())
    if "," in t:
        try:
            return parse_vector(t)
        except ConfigError:
            return tuple(s.strip() for s in t.split(","))
    try:
        return parse_number(t)
    except ConfigError:
        return t


@dataclass
class ExperimentConfig:
    """Everything an experiment needs; see the module docstring for the file format."""

    kind: str
    grid: TorusGrid
    exponents: tuple = ()
    factors: list = field(default_factory=list)
    n_schedule: tuple = ()
    tests: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    options: dict = field(default_factory=dict)

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def opt(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def with_grid(self, shape: tuple) -> "ExperimentConfig":
        lengths = self.grid.lengths if len(shape) == self.grid.dim else None
        return self.replace(grid=TorusGrid(shape, lengths))

    def replace(self, **changes) -> "ExperimentConfig":
        data = dict(kind=self.kind, grid=self.grid, exponents=self.exponents,
                    factors=[dict(f) for f in self.factors], n_schedule=self.n_schedule,
                    tests=dict(self.tests), tolerances=dict(self.tolerances), seed=self.seed,
                    options=dict(self.options))
        data.update(changes)
        return ExperimentConfig(**data)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": {"shape": list(self.grid.shape), "lengths": list(self.grid.lengths)},
            "exponents": list(self.exponents),
            "factors": [_jsonable(f) for f in self.factors],
            "n_schedule": list(self.n_schedule),
            "tests": _jsonable(self.tests),
            "tolerances": _jsonable(self.tolerances),
            "seed": self.seed,
            "options": _jsonable(self.options),
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and obj.is_integer() and abs(obj) < 2**53:
        return obj
    return obj


def parse_config(text: str) -> ExperimentConfig:
    # ';' separates vectors, so it only starts a comment at the beginning of a line
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    kind = exp.get("kind")
    if not kind:
        raise ConfigError("[experiment] needs a kind")
    if "grid" not in parser or "shape" not in parser["grid"]:
        raise ConfigError("missing [grid] shape")
    shape = parse_grid_spec(parser["grid"]["shape"])
    lengths = parse_vector(parser["grid"].get("lengths", "")) or None
    try:
        grid = TorusGrid(shape, lengths)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        seed = int(exp.get("seed", "0"))
        schedule = tuple(int(round(x)) for x in parse_vector(exp.get("n_schedule", "")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    exponents = parse_vector(exp.get("exponents", ""))
    options = {k: _value(v) for k, v in exp.items()
               if k not in ("kind", "seed", "n_schedule", "exponents")}
    factors = []
    for name in parser.sections():
        if name.startswith("factor."):
            desc = {k: _value(v) for k, v in parser[name].items()}
            desc["name"] = name.split(".", 1)[1]
            if "kind" not in desc:
                raise ConfigError(f"[{name}] needs a kind")
            factors.append(desc)
    tests = {k: _value(v) for k, v in parser["tests"].items()} if "tests" in parser else {}
    tols = {}
    if "tolerances" in parser:
        for k, v in parser["tolerances"].items():
            tols[k] = parse_number(v)
    return ExperimentConfig(kind, grid, exponents, factors, schedule, tests, tols, seed, options)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], (list, tuple)):
            return "; ".join(_fmt(x) for x in v)
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (up to number formatting)."""
    lines = ["[experiment]", f"kind = {cfg.kind}", f"seed = {cfg.seed}"]
    if cfg.n_schedule:
        lines.append(f"n_schedule = {_fmt(cfg.n_schedule)}")
    if cfg.exponents:
        lines.append(f"exponents = {_fmt(cfg.exponents)}")
    for k in sorted(cfg.options):
        lines.append(f"{k} = {_fmt(cfg.options[k])}")
    lines += ["", "[grid]", "shape = " + "x".join(str(r) for r in cfg.grid.shape),
              f"lengths = {_fmt(cfg.grid.lengths)}"]
    for f in cfg.factors:
        lines += ["", f"[factor.{f.get('name', 'f')}]"]
        for k in sorted(f):
            if k != "name":
                lines.append(f"{k} = {_fmt(f[k])}")
    for title, sec in (("tests", cfg.tests), ("tolerances", cfg.tolerances)):
        if sec:
            lines += ["", f"[{title}]"] + [f"{k} = {_fmt(sec[k])}" for k in sorted(sec)]
    return "\n".join(lines) + "\n"


def optional_vector(desc: dict, key: str) -> Optional[tuple]:
    v = desc.get(key)
    if v is None:
        return None
    if isinstance(v, (int, float)):
        return (float(v),)
    return tuple(float(x) for x in v)
