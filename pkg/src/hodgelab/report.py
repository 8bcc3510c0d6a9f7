"""Report files: JSON results, CSV/SVG convergence data and the run manifest.

Every file goes through :func:`hodgelab.formio.atomic_write`. JSON reports carry
no wall-clock data, so equal configs and seeds give byte-identical reports.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import ExperimentConfig
from .formio import atomic_write
from .harness import ConvergenceTable, ExperimentResult, _clean

__all__ = ["RunManifest", "report_json", "table_csv", "table_svg", "emit_plot_data",
           "write_outputs", "write_file"]

CSV_COLUMNS = ("n", "test_id", "value", "residual")


@dataclass
class RunManifest:
    version: str
    config_hash: str
    seed: int
    wall_time: float
    outputs: list = field(default_factory=list)

    def to_json(self) -> bytes:
        data = {"version": self.version, "config_hash": self.config_hash, "seed": self.seed,
                "wall_time": self.wall_time, "outputs": list(self.outputs)}
        return (json.dumps(data, indent=2, sort_keys=True) + "\n").encode()


def report_json(result: ExperimentResult, cfg: Optional[ExperimentConfig] = None) -> bytes:
    payload = _clean(result.to_report(cfg))
    return (json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def table_csv(table: Optional[ConvergenceTable]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    if table is not None:
        for n, tid, value, resid in table.rows():
            writer.writerow([n, tid, repr(value), repr(resid)])
    return buf.getvalue().encode()


def table_svg(table: ConvergenceTable, max_series: int = 12) -> bytes:
    """Line chart of pairing value against ``1/n``, one line per test (first few)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "hodgelab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        inv = [1.0 / n for n in table.ns]
        for j, tid in enumerate(table.test_ids[:max_series]):
            ax.plot(inv, table.values[:, j], marker="o", lw=1, label=tid)
        ax.set_xlabel("1/n")
        ax.set_ylabel("pairing value")
        ax.set_title(table.name)
        if table.test_ids:
            ax.legend(fontsize=5, ncol=2)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def write_file(path, payload: bytes) -> Path:
    try:
        return atomic_write(path, payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_plot_data(table: Optional[ConvergenceTable], path) -> list:
    """Write ``path`` as CSV and, for a nonempty table, a sibling ``.svg``."""
    path = Path(path)
    written = [write_file(path, table_csv(table))]
    if table is not None and len(table.ns) and len(table.test_ids):
        written.append(write_file(path.with_suffix(".svg"), table_svg(table)))
    return written


def write_outputs(result: ExperimentResult, cfg: ExperimentConfig, out_dir, fmt: str = "both",
                  extra_files: Optional[dict] = None) -> list:
    """Write report files into ``out_dir``; returns the paths written."""
    out = Path(out_dir)
    name = result.experiment
    written = []
    if fmt in ("json", "both"):
        written.append(write_file(out / f"{name}.json", report_json(result, cfg)))
    if fmt in ("csv", "both"):
        tables = result.tables or [None]
        for i, t in enumerate(tables):
            stem = name if t is None else f"{name}_{t.name}" + (f"_{i}" if i else "")
            written += emit_plot_data(t, out / f"{stem}.csv")
    for fname, payload in (extra_files or {}).items():
        written.append(write_file(out / fname, payload))
    return written
