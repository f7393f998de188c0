"""The deaselect command line: outputs, exit codes and reproducibility."""

import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from deaselect import cli
from deaselect.data import Dataset, load_dataset, write_dataset
from deaselect.reports import num

from conftest import nested_dataset, nonconcave_dataset


@pytest.fixture
def files(tmp_path):
    write_dataset(nonconcave_dataset(), tmp_path / "nonconcave.csv")
    write_dataset(nested_dataset(), tmp_path / "nested.csv")
    (tmp_path / "p1.cfg").write_text("p=1\n")
    (tmp_path / "p2.cfg").write_text("p=2\n")
    (tmp_path / "p3.cfg").write_text("p=3\n")
    (tmp_path / "pct.cfg").write_text("p=2\nobjective=percentile\npi=50\n")
    (tmp_path / "budget.cfg").write_text("p=3\ncost.c=1,1,1,1\ncost.C=2\n")
    return tmp_path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- eff ----------------------------------------------------------------------------

def test_eff_outputs_two_three(files, capsys):
    code, rep, _ = run(capsys, "eff", "--data", files / "nested.csv", "--outputs", "2,3", "--no-normalize")
    assert code == 0
    assert all(v == 1.0 for v in rep["efficiencies"].values())
    assert rep["active_outputs"] == [2, 3]


def test_eff_single_output(files, capsys):
    code, rep, _ = run(capsys, "eff", "--data", files / "nonconcave.csv", "--outputs", "1")
    assert code == 0
    assert list(rep["efficiencies"].values()) == pytest.approx([0.6, 0.7, 0.8, 0.9, 1.0])


def test_eff_writes_csv(files, capsys):
    out = files / "o"
    assert run(capsys, "eff", "--data", files / "nested.csv", "--out", out)[0] == 0
    rows = read(out / "efficiencies.csv")
    assert rows[0] == ["dmu", "efficiency"] and len(rows) == 5
    rep = json.loads((out / "report.json").read_text())
    assert rep["tool"] == "deaselect" and "timestamp" in rep


def test_eff_bad_outputs(files, capsys):
    code, _, err = run(capsys, "eff", "--data", files / "nested.csv", "--outputs", "4")
    assert code == 2 and "1..3" in err


# -- select ---------------------------------------------------------------------------

def test_select_joint_with_oracle(files, capsys):
    code, rep, _ = run(capsys, "select", "--data", files / "nonconcave.csv", "--config", files / "p3.cfg", "--oracle")
    assert code == 0
    sel = rep["selection"]
    assert sel["selected_outputs"] == [2, 3, 4] and sel["objective"] == pytest.approx(1.0)
    assert rep["oracle"]["agrees"]


def test_select_individual(files, capsys):
    code, rep, _ = run(
        capsys, "select", "--data", files / "nested.csv", "--config", files / "p1.cfg",
        "--mode", "individual", "--dmu", "1", "--no-normalize",
    )
    assert code == 0
    assert rep["selection"]["selected_outputs"] == [3] and rep["selection"]["objective"] == pytest.approx(1.0)


def test_select_percentile(files, capsys):
    code, rep, _ = run(capsys, "select", "--data", files / "nested.csv", "--config", files / "pct.cfg")
    assert code == 0 and rep["selection"]["objective"] == pytest.approx(1.0)


def test_select_infeasible_budget(files, capsys):
    code, rep, err = run(capsys, "select", "--data", files / "nonconcave.csv", "--config", files / "budget.cfg")
    assert code == 4
    assert rep["error"]["kind"] == "StructurallyInfeasible" and "budget" in err


def test_select_needs_config(files, capsys):
    assert run(capsys, "select", "--data", files / "nested.csv")[0] == 2


def test_select_missing_file(files, capsys):
    assert run(capsys, "select", "--data", files / "absent.csv", "--config", files / "p1.cfg")[0] == 2


def test_select_individual_needs_dmu(files, capsys):
    code = run(capsys, "select", "--data", files / "nested.csv", "--config", files / "p1.cfg", "--mode", "individual")[0]
    assert code == 2


def test_oracle_mismatch_exit(files, capsys, monkeypatch):
    real = cli.enumerate_best

    def shifted(*a, **kw):
        s = real(*a, **kw)
        s.objective_value += 1e-3
        return s

    monkeypatch.setattr(cli, "enumerate_best", shifted)
    code, rep, err = run(capsys, "select", "--data", files / "nested.csv", "--config", files / "p2.cfg", "--oracle")
    assert code == 3 and "oracle mismatch" in err
    assert rep["oracle"]["agrees"] is False


def test_oracle_cap_is_a_warning(files, capsys, monkeypatch):
    monkeypatch.setattr(cli, "enumerate_best", lambda *a, **kw: (_ for _ in ()).throw(cli.CapExceeded(10, 1)))
    code, rep, err = run(capsys, "select", "--data", files / "nested.csv", "--config", files / "p2.cfg", "--oracle")
    assert code == 0 and "oracle skipped" in err and "oracle" not in rep


def test_bad_data_exit(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("id,in:x,out:y\nA,1,-2\n")
    (tmp_path / "c.cfg").write_text("p=1\n")
    code, rep, _ = run(capsys, "select", "--data", tmp_path / "bad.csv", "--config", tmp_path / "c.cfg")
    assert code == 2 and rep["exit_code"] == 2


# -- sweep ------------------------------------------------------------------------------

def test_sweep_nonconcave(files, capsys):
    out = files / "sw"
    code = run(capsys, "sweep", "--data", files / "nonconcave.csv", "--config", files / "p1.cfg",
               "--p-min", "1", "--p-max", "3", "--out", out)[0]
    assert code == 0
    summary = read(out / "summary.csv")
    assert summary[0][:4] == ["p", "min", "max", "mean"]
    means = [float(r[3]) for r in summary[1:]]
    assert means == pytest.approx([0.8, 0.866666666667, 1.0], abs=1e-9)
    assert all(b >= a - 1e-9 for a, b in zip(means, means[1:]))
    curve = read(out / "vcurve.csv")
    assert float(curve[1][2]) == pytest.approx(0.0667, abs=1e-3)
    assert float(curve[2][2]) == pytest.approx(0.1333, abs=1e-3)
    hist = read(out / "histogram_p3.csv")
    assert len(hist) == 21 and int(hist[-1][1]) == 5


def test_sweep_partial_failure_exit(files, capsys):
    (files / "b.cfg").write_text("p=1\ncost.c=1,1,5,5\ncost.C=2\n")
    code, rep, _ = run(capsys, "sweep", "--data", files / "nonconcave.csv", "--config", files / "b.cfg")
    assert code == 4
    assert rep["rows"][2]["error_kind"] == "StructurallyInfeasible"
    assert rep["rows"][0]["selected_outputs"]


def test_sweep_bad_range(files, capsys):
    code = run(capsys, "sweep", "--data", files / "nested.csv", "--config", files / "p1.cfg", "--p-max", "7")[0]
    assert code == 2


# -- game -------------------------------------------------------------------------------

def test_game_nested(files, capsys):
    out = files / "g"
    code = run(capsys, "game", "--data", files / "nested.csv", "--config", files / "p2.cfg", "--out", out)[0]
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["support_over_50"] == 0 and rep["histogram"][0] == 4
    hist = read(out / "histogram.csv")
    assert [int(r[0]) for r in hist[1:]] == list(range(0, 100, 5))
    assert len(read(out / "delta.csv")) == 5


# -- validate ---------------------------------------------------------------------------

def test_validate_clean(files, capsys):
    code, rep, _ = run(capsys, "validate", "--data", files / "nested.csv")
    assert code == 0 and rep["ok"] and rep["violations"] == []


def test_validate_constant_column(tmp_path, capsys):
    (tmp_path / "c.csv").write_text("id,in:x,out:a,out:b\nA,1,1,5\nB,2,2,5\nC,1,3,5\n")
    out = tmp_path / "v"
    code, _, err = run(capsys, "validate", "--data", tmp_path / "c.csv", "--out", out)
    assert code == 0 and "zero range, left unnormalized: b" in err
    rho = read(out / "correlation.csv")
    assert float(rho[2][2]) == 0.0 and float(rho[1][1]) == 1.0


def test_validate_zero_input_row(tmp_path, capsys):
    (tmp_path / "z.csv").write_text("id,in:x,out:a\nA,0,1\nB,2,2\n")
    code, rep, err = run(capsys, "validate", "--data", tmp_path / "z.csv")
    assert code == 2 and rep["ok"] is False and "all inputs are zero" in err


def test_validate_unparseable(tmp_path, capsys):
    (tmp_path / "n.csv").write_text("id,in:x,out:a\nA,one,1\n")
    code, rep, _ = run(capsys, "validate", "--data", tmp_path / "n.csv")
    assert code == 2 and rep["violations"]


# -- synth and reproducibility ---------------------------------------------------------

def test_synth_writes_loadable_data(tmp_path, capsys):
    out = tmp_path / "s"
    assert run(capsys, "synth", "--K", "6", "--O", "3", "--seed", "4", "--out", out)[0] == 0
    d = load_dataset(out / "data.csv")
    assert (d.K, d.I, d.O) == (6, 1, 3)
    assert np.all((d.inputs >= 1) & (d.inputs <= 2)) and np.all((d.outputs >= 0.1) & (d.outputs <= 1))


def test_synth_needs_out(capsys):
    assert run(capsys, "synth", "--K", "3", "--O", "2")[0] == 2


def test_no_timestamp_is_byte_identical(files, capsys):
    out = files / "r"
    argv = ["sweep", "--data", files / "nonconcave.csv", "--config", files / "p1.cfg", "--out", out, "--no-timestamp"]
    assert run(capsys, *argv)[0] == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    shutil.rmtree(out)
    assert run(capsys, *argv)[0] == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second
    assert b"wall_time" not in first["report.json"] and b'"timestamp":' not in first["report.json"]


def test_csv_numbers_keep_twelve_digits(files, capsys):
    out = files / "e"
    run(capsys, "eff", "--data", files / "nonconcave.csv", "--outputs", "1,2", "--out", out)
    rows = read(out / "efficiencies.csv")[1:]
    from deaselect.efficiency import all_efficiencies
    from deaselect.data import normalize_outputs

    ref = all_efficiencies(normalize_outputs(nonconcave_dataset()), [0, 1])
    for (_, v), e in zip(rows, ref):
        assert float(v) == num(e)


def test_num_rounds_significant_digits():
    assert num(2 / 3) == 0.666666666667
    assert num(float("nan")) is None
    assert num(123456.7890123456) == 123456.789012


def test_console_script(files):
    exe = shutil.which("deaselect")
    cmd = [exe] if exe else [sys.executable, "-m", "deaselect.cli"]
    res = subprocess.run(cmd + ["eff", "--data", str(files / "nested.csv")], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["tool"] == "deaselect"
