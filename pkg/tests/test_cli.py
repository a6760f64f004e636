import json
import math
import subprocess
import sys

import pytest

from channel_thermo.cli import dumps, main


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_capacity_bits(tmp_path, capsys):
    ch = write_json(tmp_path, "bsc.json", {"W": [[0.9, 0.1], [0.1, 0.9]]})
    status, out, _ = run(capsys, "capacity", "--channel", ch, "--bits")
    assert status == 0
    data = json.loads(out)
    assert data["C"] == pytest.approx(0.53100, abs=1e-5)
    assert data["units"] == "bits"
    assert data["d_positive"] is True


def test_capacity_csv_input(tmp_path, capsys):
    path = tmp_path / "w.csv"
    path.write_text("0.9,0.1\n0.1,0.9\n")
    status, out, _ = run(capsys, "capacity", "--channel", str(path), "--method", "ba")
    assert status == 0
    data = json.loads(out)
    assert data["method"] == "blahut-arimoto"
    assert data["C"] == pytest.approx(math.log(2) - 0.325083, abs=1e-6)


def test_invalid_channel_exit_2(tmp_path, capsys):
    ch = write_json(tmp_path, "bad.json", {"W": [[0.9, 0.2], [0.1, 0.9]]})
    status, out, err = run(capsys, "capacity", "--channel", ch)
    assert status == 2
    assert out == ""
    assert json.loads(err)["error"] == "row_sum_violation"


def test_missing_file_exit_2(tmp_path, capsys):
    status, _, err = run(capsys, "mixing", "--channel", str(tmp_path / "nope.json"))
    assert status == 2
    assert json.loads(err)["error"] == "invalid_params"


def test_numerical_failure_exit_1(tmp_path, capsys):
    ch = write_json(tmp_path, "eye.json", {"W": [[1, 0], [0, 1]]})
    status, _, err = run(capsys, "mixing", "--channel", ch)
    assert status == 1
    assert json.loads(err)["error"] == "non_unique_invariant"


def test_mixing_output(tmp_path, capsys):
    ch = write_json(tmp_path, "bsc.json", {"W": [[0.9, 0.1], [0.1, 0.9]]})
    _, out, _ = run(capsys, "mixing", "--channel", ch)
    assert json.loads(out)["t_mix"] == pytest.approx(1 / 0.36, rel=1e-12)


def test_thermo_degenerate_reports_inf(tmp_path, capsys):
    W = [[0.9, 0.05, 0.05], [0.45, 0.1, 0.45], [0.05, 0.05, 0.9]]
    ch = write_json(tmp_path, "w.json", {"W": W})
    status, out, _ = run(capsys, "thermo", "--channel", ch)
    assert status == 0
    data = json.loads(out)
    assert data["degenerate"] is True
    assert data["beta_mix"] == "inf"
    assert data["F_mix"] == 0.0


def test_thermo_state(tmp_path, capsys):
    p = write_json(tmp_path, "p.json", {"p": [0.5, 0.5]})
    _, out, _ = run(capsys, "thermo-state", "--p", p, "--t-inf", "1")
    data = json.loads(out)
    assert data["beta"] == pytest.approx(0.70711, abs=1e-5)
    assert data["F"] == pytest.approx(-0.98026, abs=1e-5)


def test_sweep_and_report(tmp_path, capsys):
    grid = str(tmp_path / "grid.csv")
    status, out, _ = run(capsys, "sweep", "--family", "biodmc", "--nu", "11", "--nv", "11", "--workers", "1", "--out", grid)
    assert status == 0
    assert json.loads(out) == {"cells": 121, "failed": 0, "degenerate": 0}
    status, out, _ = run(capsys, "report", "--grid", grid, "--check", "eq2")
    assert status == 0
    assert json.loads(out)["passed"] is True


def test_report_psi_needs_family(tmp_path, capsys):
    grid = str(tmp_path / "grid.csv")
    run(capsys, "sweep", "--family", "biodmc", "--nu", "3", "--nv", "3", "--workers", "1", "--out", grid)
    status, _, err = run(capsys, "report", "--grid", grid, "--check", "psi")
    assert status == 2
    assert json.loads(err)["error"] == "invalid_params"


def test_sweep_rejects_tiny_grid(capsys):
    status, _, err = run(capsys, "sweep", "--family", "biodmc", "--nu", "1")
    assert status == 2


def test_sweep_bad_params_file(tmp_path, capsys):
    params = write_json(tmp_path, "p.json", {"W99": 0.1})
    status, _, err = run(capsys, "sweep", "--family", "constrained3", "--params", params, "--nu", "3", "--nv", "3")
    assert status == 2


def test_verify_core_deterministic(capsys):
    _, first, _ = run(capsys, "verify", "--suite", "core", "--seed", "3")
    status, second, _ = run(capsys, "verify", "--suite", "core", "--seed", "3")
    assert status == 0
    assert first == second
    assert json.loads(first)["passed"] is True


def test_verify_unknown_suite(capsys):
    status, _, err = run(capsys, "verify", "--suite", "everything")
    assert status == 2


def test_dumps_formatting():
    assert dumps({"x": 0.1, "y": math.inf, "z": math.nan}) == '{"x": 0.10000000000000001, "y": "inf", "z": null}\n'


def test_console_script(tmp_path):
    ch = write_json(tmp_path, "bsc.json", {"W": [[0.8, 0.2], [0.2, 0.8]]})
    proc = subprocess.run(
        [sys.executable, "-m", "channel_thermo.cli", "capacity", "--channel", ch],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["method"] == "muroga"
