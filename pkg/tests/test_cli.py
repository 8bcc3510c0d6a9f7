import json
from contextlib import nullcontext

import numpy as np
import pytest

from hodgelab import TorusGrid, random_form
from hodgelab.cli import main
from hodgelab.errors import HypothesisWarning
from hodgelab.config import format_config, load_config
from hodgelab.formio import read_form, write_form
from hodgelab.presets import preset, preset_text
from hodgelab.report import table_csv


def _write_cfg(tmp_path, name, **changes):
    cfg = preset(name).replace(**changes) if changes else preset(name)
    path = tmp_path / f"{name}.cfg"
    path.write_text(format_config(cfg))
    return path


def test_selftest_exit_zero(capsys):
    assert main(["selftest"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdicts"]["status"] == "PASS"


@pytest.mark.parametrize("argv", [[], ["bogus"], ["quadratic", "--format", "xml"],
                                  ["quadratic", "--threads", "0"]])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_config_exit_one(tmp_path, capsys):
    assert main(["quadratic", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "error" in capsys.readouterr().err


def test_kind_mismatch_exit_one(tmp_path):
    cfg = _write_cfg(tmp_path, "quadratic")
    assert main(["gaffney", "--config", str(cfg)]) == 1


def test_malformed_config_exit_one(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[experiment]\nkind = wedge\ngrid = banana\n")
    assert main(["wedge", "--config", str(path)]) == 1


def test_outputs_and_manifest(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, "quadratic")
    out = tmp_path / "out"
    assert main(["quadratic", "--config", str(cfg_path), "--out", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == "quadratic: PASS"
    listed = json.loads(printed[1])["outputs"]
    assert all((out / f).exists() for f in listed)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == load_config(cfg_path).digest()


def test_report_is_deterministic(tmp_path):
    cfg_path = _write_cfg(tmp_path, "quadratic")
    blobs = []
    for tag in ("a", "b"):
        assert main(["quadratic", "--config", str(cfg_path), "--out", str(tmp_path / tag),
                     "--format", "json"]) == 0
        blobs.append((tmp_path / tag / "quadratic.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_empty_table_csv_is_header_only():
    assert table_csv(None) == b"n,test_id,value,residual\n"


def test_nmax_filters_schedule(capsys):
    assert main(["immersion", "--grid", "128x128", "--nmax", "8"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["config_echo"]["n_schedule"] == [4, 8]


def test_nmax_too_small(capsys):
    assert main(["immersion", "--nmax", "4"]) == 1


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("HODGELAB_THREADS", "x")
    assert main(["selftest"]) == 1
    monkeypatch.setenv("HODGELAB_THREADS", "1")
    assert main(["selftest"]) == 0


@pytest.mark.parametrize("override,code", [(False, 1), (True, 3)])
def test_gate_exit_codes(tmp_path, override, code):
    cfg = _write_cfg(tmp_path, "immersion_gate", n_schedule=(2, 4, 8))
    argv = ["immersion", "--config", str(cfg), "--grid", "128x128"]
    if override:
        argv.append("--override-gate")
    with pytest.warns(HypothesisWarning) if override else nullcontext():
        assert main(argv) == code


@pytest.mark.parametrize("degree", [1, 2])
def test_decompose_input_file(tmp_path, degree, capsys):
    grid = TorusGrid.cube(2, 32)
    src = write_form(tmp_path / "w.hfrm", random_form(grid, degree, np.random.default_rng(degree)))
    cfg = tmp_path / "d.cfg"
    cfg.write_text(preset_text("decompose").replace("samples = 1000", f"samples = 1\ninput = {src}"))
    out = tmp_path / "out"
    assert main(["decompose", "--config", str(cfg), "--out", str(out)]) == 0
    parts = sorted(p.name for p in out.glob("*.hfrm"))
    assert "w.coexact.hfrm" in parts or "w.exact.hfrm" in parts
    total = sum((read_form(out / p).data for p in parts), start=np.zeros_like(read_form(src).data))
    assert np.allclose(total, read_form(src).data, atol=1e-10)
