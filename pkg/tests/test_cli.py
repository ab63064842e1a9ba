import json
import subprocess
import sys

import pytest

from spinslosh.cli import main
from spinslosh.scenario import bundled_path
from spinslosh.trace import read_trace_csv

OPEN = str(bundled_path("open_loop_flatspin.scn"))
CLOSED = str(bundled_path("closed_loop_spinup.scn"))


def test_dimensionless_json(capsys):
    assert main(["dimensionless", OPEN, "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["Oh"] == pytest.approx(1.021e-3, rel=5e-3)
    assert d["Bo_c"] == pytest.approx(116, rel=2e-2)


def test_simulate_then_report(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["simulate", CLOSED, "-o", str(out)]) == 0
    tr = read_trace_csv(out)
    assert tr.t[-1] == pytest.approx(92.0)
    assert tr.meta["kind"] == "closed_loop"
    assert main(["report", str(out), "-o", str(tmp_path / "rep")]) == 0
    assert "terminal omega_z" in capsys.readouterr().out
    for name in ("summary.txt", "force.svg", "torque.svg", "omega.svg"):
        assert (tmp_path / "rep" / name).is_file()


def test_open_loop_flag_overrides_control(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["simulate", CLOSED, "--open-loop", "-o", str(out)]) == 0
    assert read_trace_csv(out).meta["kind"] == "open_loop"


def test_validation_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[tank]\nfill_ratio = 1.2\n")
    assert main(["dimensionless", str(bad)]) == 2
    assert "fill_ratio" in capsys.readouterr().err


def test_closed_loop_flag_without_control_exits_2(tmp_path):
    assert main(["simulate", OPEN, "--closed-loop", "-o", str(tmp_path / "x.csv")]) == 2


def test_runtime_error_exits_1(tmp_path):
    assert main(["simulate", OPEN, "-o", str(tmp_path / "no" / "such" / "dir.csv")]) == 1


def test_empty_trace_report_exits_2(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("t,Fx\n")
    assert main(["report", str(p), "-o", str(tmp_path / "r")]) == 2


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "spinslosh.cli", "dimensionless", OPEN],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert "Bo_i" in r.stdout
