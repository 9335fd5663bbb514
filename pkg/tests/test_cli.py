import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cornerflow import GridFunction, symmetric_grid
from cornerflow import cli
from cornerflow.errors import PicardDivergence


def run_cli(*argv):
    return cli.main(list(argv))


def _manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def test_kernel_command(tmp_path, capsys):
    out = tmp_path / "k"
    code = run_cli("kernel", "--eta-max", "20", "--nodes", "2048",
                   "--out-dir", str(out))
    assert code == 0
    text = capsys.readouterr().out
    assert "Gamma(5/4)/pi" in text
    man = _manifest(out)
    assert set(man["artifacts"]) == {"kernel.csv", "kernel_summary.json"}
    with open(out / "kernel_summary.json") as fh:
        summary = json.load(fh)
    assert abs(summary["g0"] - summary["g0_reference"]) < 1e-10
    assert abs(summary["exponents"]["1"]["exponent"] + 0.25) < 0.02


def test_kernel_rejects_bad_grid(tmp_path, capsys):
    code = run_cli("kernel", "--nodes", "100", "--out-dir",
                   str(tmp_path / "k"))
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_solve_command_and_determinism(tmp_path, capsys):
    outs = []
    for name in ("s1", "s2"):
        out = tmp_path / name
        code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--intervals",
                       "1024", "--times", "1", "--out-dir", str(out))
        assert code == 0
        outs.append(_manifest(out)["artifacts"])
    assert outs[0] == outs[1]  # bit-identical artifacts on repeated runs
    assert "U_t1.csv" in outs[0]
    text = capsys.readouterr().out
    assert "converged=True" in text
    with open(tmp_path / "s1" / "solve_summary.json") as fh:
        summary = json.load(fh)
    assert summary["iterations"] <= 50
    assert abs(summary["phi0"] - 0.0779566) < 1e-5
    # 1024 cells is a smoke grid; the strict 1e-4 bound is checked at 8192
    assert summary["self_similarity"]["2.0"] < 1e-3


def test_solve_linear_note(tmp_path, capsys):
    code = run_cli("solve", "--a", "0.1", "--b", "-0.1", "--intervals",
                   "1024", "--times", "1", "--out-dir", str(tmp_path / "s"))
    assert code == 0
    assert "A == -B" in capsys.readouterr().out


def test_solve_slope_cap_exit(tmp_path, capsys):
    code = run_cli("solve", "--a", "5", "--b", "0.1", "--out-dir",
                   str(tmp_path / "s"))
    assert code == 2
    assert "slope_cap" in capsys.readouterr().err


def test_solve_no_convergence_exit(tmp_path):
    code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--intervals",
                   "1024", "--max-iter", "1", "--out-dir",
                   str(tmp_path / "s"))
    assert code == 3


def test_solve_divergence_writes_history(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise PicardDivergence("updates grew", [1.0, 2.0, 4.0])
    monkeypatch.setattr(cli, "build_kernel_table", lambda *a, **k: None)
    monkeypatch.setattr(cli, "solve_similarity_profile", boom)
    out = tmp_path / "s"
    code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--out-dir",
                   str(out))
    assert code == 3
    with open(out / "history.json") as fh:
        assert json.load(fh)["residual_history"] == [1.0, 2.0, 4.0]


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nintervals = 512\na = 0.05\n")
    out = tmp_path / "s"
    code = run_cli("solve", "--a", "0.1", "--b", "0.05", "--intervals",
                   "2048", "--times", "1", "--config", str(cfg),
                   "--out-dir", str(out))
    assert code == 0
    man = _manifest(out)
    assert man["config"]["a"] == 0.05
    assert man["config"]["intervals"] == 512
    arr = np.loadtxt(out / "profile.csv", delimiter=",", skiprows=1)
    assert arr.shape[0] == 513


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("granularity = 9\n")
    code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--config",
                   str(cfg), "--out-dir", str(tmp_path / "s"))
    assert code == 2
    assert "unknown option" in capsys.readouterr().err


def test_sweep_runs_worker_pool(tmp_path):
    out = tmp_path / "sweep"
    code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--sweep",
                   "a=0.05:0.05:0.1", "--intervals", "1024", "--times",
                   "1", "--workers", "2", "--out-dir", str(out))
    assert code == 0
    for sub in ("a_0.05", "a_0.1"):
        assert (out / sub / "solve_summary.json").exists()
    with open(out / "a_0.05" / "solve_summary.json") as fh:
        assert json.load(fh)["A"] == 0.05


def test_sweep_spec_validation(tmp_path, capsys):
    code = run_cli("solve", "--a", "0.1", "--b", "0.1", "--sweep",
                   "c=0:1:2", "--out-dir", str(tmp_path / "s"))
    assert code == 2


def test_diagnose_counterexample(tmp_path, capsys):
    out = tmp_path / "d"
    code = run_cli("diagnose", "--counterexample", "--a", "1", "--eps",
                   "0.1", "--out-dir", str(out))
    assert code == 0
    text = capsys.readouterr().out
    assert "far gap" in text
    with open(out / "counterexample.json") as fh:
        fit = json.load(fh)
    assert abs(fit["gap_far"] - fit["gap_expected"]) < 1e-10
    man = _manifest(out)
    assert "counterexample_D.csv" in man["artifacts"]


def test_diagnose_input_csv(tmp_path, capsys):
    xs = symmetric_grid(10.0, 2048)
    lin = GridFunction(xs, 0.25 * xs, 0.25, 0.25, "linear")
    src = tmp_path / "lin.csv"
    lin.to_csv(src)
    out = tmp_path / "d"
    code = run_cli("diagnose", "--input", str(src), "--out-dir", str(out))
    assert code == 0
    text = capsys.readouterr().out
    assert "esp_zero_corner" in text
    assert "FAIL" not in text
    assert (out / "summary.csv").exists()
    assert (out / "report.json").exists()


def test_diagnose_missing_input(tmp_path, capsys):
    code = run_cli("diagnose", "--input", str(tmp_path / "nope.csv"),
                   "--out-dir", str(tmp_path / "d"))
    assert code == 2


def test_diagnose_needs_a_source(tmp_path):
    assert run_cli("diagnose", "--out-dir", str(tmp_path / "d")) == 2


def test_oracle_compare_grid_mismatch(tmp_path, capsys):
    code = run_cli("oracle-compare", "--mild-intervals", "2048",
                   "--out-dir", str(tmp_path / "o"))
    assert code == 2
    assert "matching march and mild grids" in capsys.readouterr().err


def test_oracle_compare_short_horizon(tmp_path, capsys):
    out = tmp_path / "o"
    code = run_cli("oracle-compare", "--intervals", "512", "--dt-max",
                   "2e-4", "--times", "0.05", "--out-dir", str(out))
    assert code == 0
    with open(out / "oracle_compare.json") as fh:
        rows = json.load(fh)["rows"]
    assert rows[0]["sup_diff"] < 5e-2
    assert (out / "march_t0.05.csv").exists()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "cornerflow.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "kernel" in out.stdout and "oracle-compare" in out.stdout


def test_manifest_checksums_match_files(tmp_path):
    out = tmp_path / "d"
    run_cli("diagnose", "--counterexample", "--out-dir", str(out))
    man = _manifest(out)
    for rel, digest in man["artifacts"].items():
        assert cli._sha256(os.path.join(out, rel)) == digest
