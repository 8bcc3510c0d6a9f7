"""Command-line entry point: ``hodgelab <subcommand> [flags]``.

Exit codes: 0 verdict PASS, 2 verdict FAIL, 3 PASS tainted by a
HypothesisWarning, 1 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, parse_grid_spec
from .errors import ConfigError, GateError, HodgeLabError
from .estimates import endpoint_elliptic_check, gaffney_check, quadratic_defect_check
from .forms import Form, exterior_derivative, lp_norm, set_fft_workers
from .formio import FormFileError, read_form, write_form
from .harness import (ExperimentResult, Verdict, bilinear_wedge_experiment, cycle_pairing_check,
                      divcurl_experiment, endpoint_experiment, multilinear_experiment,
                      subcritical_vanishing_check)
from .hodge import hodge_decompose
from .identities import calculus_sweep, hodge_sweep
from .immersion import weak_continuity_experiment
from .presets import SUBCOMMAND_PRESET, preset
from .report import RunManifest, report_json, write_file, write_outputs
from .torus import TorusGrid

__all__ = ["main", "build_parser", "run_config", "decompose_experiment", "selftest"]

HELP = {
    "decompose": "Hodge-decompose a form file, or sweep the calculus and Hodge identities",
    "wedge": "weak limit of a wedge product, with defect atoms and their bound",
    "divcurl": "inner product of a closed and a coclosed sequence",
    "multilinear": "iterated wedge of L factors, with the no-loss condition reported",
    "endpoint": "measure-valued factor against an L^N-converging factor",
    "cycles": "pairing with the fundamental cycle next to detected atoms",
    "quadratic": "cell-wise defect of quadratic expressions in scalar sequences",
    "elliptic": "endpoint elliptic ratio for the mollified-atom family",
    "gaffney": "empirical Gaffney constants over random forms",
    "immersion": "structural equations under weak convergence of the connection",
    "selftest": "fast closed-form checks (no config)",
}

SUBCOMMANDS = ("decompose", "wedge", "divcurl", "multilinear", "endpoint", "cycles", "quadratic",
               "elliptic", "gaffney", "immersion", "selftest")

# config kinds each subcommand accepts
KINDS = {
    "decompose": ("decompose",),
    "wedge": ("wedge", "subcritical"),
    "divcurl": ("divcurl",),
    "multilinear": ("multilinear",),
    "endpoint": ("endpoint",),
    "cycles": ("cycles",),
    "quadratic": ("quadratic",),
    "elliptic": ("elliptic",),
    "gaffney": ("gaffney",),
    "immersion": ("immersion",),
}

CALCULUS_KEYS = ("dd", "codiff_codiff", "star_star", "adjoint", "leibniz")
HODGE_KEYS = ("reconstruction", "gauge", "potential_mean", "orthogonality", "exact_idempotent",
              "leray_idempotent", "leray_coclosed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# experiments that live at the CLI level

def decompose_experiment(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> ExperimentResult:
    """Decompose a form file (option ``input``) or run the identity sweeps."""
    source = cfg.opt("input")
    if source:
        form = read_form(source)
        parts = hodge_decompose(form)
        norm = lp_norm(form, 2)
        rec = lp_norm(parts.recombine() - form, 2) / max(norm, 1e-300)
        pieces = {"exact": parts.exact, "coexact": parts.coexact, "harmonic": parts.harmonic}
        written = []
        if out_dir is not None:
            stem = Path(str(source)).stem
            for name, f in pieces.items():
                if f is not None:
                    written.append(str(write_form(Path(out_dir) / f"{stem}.{name}.hfrm", f).name))
        norms = {k: (lp_norm(f, 2) if f is not None else 0.0) for k, f in pieces.items()}
        verdict = Verdict.from_checks({"reconstruction": rec <= cfg.tol("hodge", 1e-10)},
                                      {"relative_reconstruction_error": rec})
        return ExperimentResult("decompose", [], None, verdict,
                                {"input": str(source), "degree": form.degree,
                                 "grid": list(form.grid.shape), "l2_norms": norms,
                                 "part_files": written})
    grids = cfg.opt("grids")
    if grids is None:
        grids = [cfg.grid]
    else:
        grids = [TorusGrid(parse_grid_spec(g)) for g in ((grids,) if isinstance(grids, str) else grids)]
    samples = int(cfg.opt("samples", 1000))
    tol_c, tol_h = cfg.tol("calculus", 1e-9), cfg.tol("hodge", 1e-10)
    checks, sweeps = {}, {}
    for grid in grids:
        rng = np.random.default_rng(cfg.seed)
        tag = "x".join(map(str, grid.shape))
        calc = calculus_sweep(grid, samples, rng)
        hod = hodge_sweep(grid, samples, rng)
        for k in CALCULUS_KEYS:
            checks[f"{k}[{tag}]"] = calc[k] <= tol_c
        for k in HODGE_KEYS:
            checks[f"{k}[{tag}]"] = hod[k] <= tol_h
        sweeps[tag] = {"calculus": calc, "hodge": hod}
    verdict = Verdict.from_checks(checks, {"samples_per_degree": samples})
    return ExperimentResult("decompose", [], None, verdict, {"sweeps": sweeps})


def selftest() -> ExperimentResult:
    """Fast closed-form and structural examples."""
    from .immersion import assemble_connection, clifford_baseline, SecondFundamentalForm, \
        structural_residual
    from .estimates import gaffney_ratio
    from .report import table_csv
    from .sequences import oscillator

    g = TorusGrid((64, 64))
    x1 = g.coords()[0]
    checks = {}
    rng = np.random.default_rng(0)
    calc = calculus_sweep(g, 5, rng)
    checks["calculus_identities"] = max(calc.values()) <= 1e-9
    s = Form.from_components(g, 0, {(): np.sin(2 * np.pi * x1)})
    checks["sine_l2_norm"] = abs(lp_norm(s, 2) - 2**-0.5) <= 1e-12
    osc = oscillator(g, (1, 0), (1.0, 0.0), 4)
    checks["oscillator_closed"] = lp_norm(exterior_derivative(osc), 2) <= 1e-12
    _, om = clifford_baseline(g)
    checks["clifford_exact"] = structural_residual(om, 2.0) <= 1e-10
    zero = assemble_connection(SecondFundamentalForm(g, np.zeros((2, 2, 2))))
    checks["zero_connection"] = all(e is None for row in zero.entries for e in row)
    mode = Form.from_components(g, 1, {(1,): np.sin(2 * np.pi * x1), (2,): np.cos(2 * np.pi * x1)})
    checks["gaffney_single_mode"] = gaffney_ratio(mode, 2.0) <= 1 + 1e-9
    try:
        gate_cfg = preset("immersion_gate").with_grid((64, 64)).replace(n_schedule=(2, 4))
        weak_continuity_experiment(gate_cfg)
        checks["gate_refuses"] = False
    except GateError:
        checks["gate_refuses"] = True
    checks["empty_table_csv"] = table_csv(None) == b"n,test_id,value,residual\n"
    return ExperimentResult("selftest", [], None, Verdict.from_checks(checks))


def _runner(kind: str, args) -> Callable[[ExperimentConfig], ExperimentResult]:
    return {
        "decompose": lambda c: decompose_experiment(c, args.out),
        "wedge": bilinear_wedge_experiment,
        "subcritical": subcritical_vanishing_check,
        "divcurl": divcurl_experiment,
        "multilinear": multilinear_experiment,
        "endpoint": endpoint_experiment,
        "cycles": cycle_pairing_check,
        "quadratic": quadratic_defect_check,
        "elliptic": endpoint_elliptic_check,
        "gaffney": gaffney_check,
        "immersion": lambda c: weak_continuity_experiment(c, override_gate=args.override_gate),
    }[kind]


def run_config(cfg: ExperimentConfig, subcommand: str, args=None) -> ExperimentResult:
    if cfg.kind not in KINDS[subcommand]:
        raise ConfigError(f"config kind {cfg.kind!r} does not belong to {subcommand!r}; "
                          f"expected one of {KINDS[subcommand]}")
    args = args or argparse.Namespace(out=None, override_gate=False)
    return _runner(cfg.kind, args)(cfg)


# --------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hodgelab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hodgelab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, help="experiment config (INI); built-in preset if absent")
        p.add_argument("--out", type=Path, help="output directory; report goes to stdout if absent")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--grid", help="override the grid, e.g. 256x256 or 64x64x64")
        p.add_argument("--nmax", type=int, help="drop schedule entries above this n")
        p.add_argument("--threads", type=int, help="FFT worker threads (default $HODGELAB_THREADS)")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both",
                       help="which files to write under --out")
        p.add_argument("--override-gate", action="store_true",
                       help="run below the critical exponent, flagged in the report")
    return parser


def _threads(args) -> Optional[int]:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HODGELAB_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HODGELAB_THREADS must be an integer, got {env!r}") from None
    return None


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = cfg.replace(seed=args.seed)
    if args.grid:
        cfg = cfg.with_grid(parse_grid_spec(args.grid))
        if "grids" in cfg.options:
            opts = dict(cfg.options)
            opts.pop("grids")
            cfg = cfg.replace(options=opts)
    if args.nmax is not None:
        sched = tuple(n for n in cfg.n_schedule if n <= args.nmax)
        if cfg.n_schedule and len(sched) < 2:
            raise ConfigError(f"--nmax {args.nmax} leaves fewer than two schedule entries")
        tests = dict(cfg.tests)
        if "bound_ns" in tests:
            tests["bound_ns"] = tuple(n for n in np.atleast_1d(tests["bound_ns"]) if n <= args.nmax)
        cfg = cfg.replace(n_schedule=sched, tests=tests)
    if args.override_gate:
        cfg = cfg.replace(options={**cfg.options, "override_gate": True})
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: " + " | ".join(SUBCOMMANDS))
        threads = _threads(args)
        if threads is not None:
            if threads < 1:
                raise UsageError("--threads must be positive")
            set_fft_workers(threads)
        start = time.perf_counter()
        if args.command == "selftest":
            cfg = None
            result = selftest()
        else:
            cfg = load_config(args.config) if args.config else preset(SUBCOMMAND_PRESET[args.command])
            cfg = _apply_overrides(cfg, args)
            result = run_config(cfg, args.command, args)
        wall = time.perf_counter() - start
    except UsageError as exc:
        print(f"hodgelab: usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (HodgeLabError, FormFileError, OSError) as exc:
        print(f"hodgelab: error: {exc}", file=sys.stderr)
        return 1

    v = result.verdict
    if args.out is None:
        sys.stdout.write(report_json(result, cfg).decode())
    else:
        try:
            files = write_outputs(result, cfg, args.out, args.format)
            manifest = RunManifest(__version__, cfg.digest() if cfg else "", cfg.seed if cfg else 0,
                                   round(wall, 3), sorted(str(Path(f).name) for f in files))
            write_file(Path(args.out) / "manifest.json", manifest.to_json())
        except OSError as exc:
            print(f"hodgelab: error: {exc}", file=sys.stderr)
            return 1
        failed = [k for k, ok in v.checks.items() if not ok]
        line = f"{result.experiment}: {v.status}" + (" (tainted)" if v.tainted else "")
        if failed:
            line += " failed: " + ", ".join(failed)
        print(line)
        print(json.dumps({"outputs": manifest.outputs + ["manifest.json"]}))
    return v.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
