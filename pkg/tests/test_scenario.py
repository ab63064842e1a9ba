import logging

import numpy as np
import pytest

from spinslosh import ScenarioError, ValidationError, bundled_path, load_bundled, parse_scenario
from spinslosh.control import ReferenceMode
from spinslosh.scenario import BUNDLED, parse_scenario_text

MINIMAL = """
[tank]
R_t = 0.05
r_cb = 0, 0.2667, 0
[control]
epsilon = 0.7
omega_n = 0.06
"""


def test_bundled_closed_loop():
    sc = load_bundled("closed_loop_spinup.scn")
    assert sc.control.omega_nom == 1.5
    assert sc.maneuver.t_acc == 10
    np.testing.assert_array_equal(np.diag(sc.inertia.J), [0.5002, 1.2404, 1.6727])
    assert sc.t_end == 92
    assert sc.control.reference == ReferenceMode.STEP
    assert sc.slosh.m_tot == pytest.approx(1400 * 0.5 * 4 / 3 * np.pi * 0.05**3, rel=1e-12)
    assert sc.slosh.m_p == pytest.approx(0.22 * sc.slosh.m_tot, rel=1e-12)


def test_bundled_open_loop():
    sc = load_bundled("open_loop_flatspin.scn")
    assert sc.control is None
    assert sc.t_end == 150
    assert sc.maneuver.omega_dot == pytest.approx(0.14936, rel=1e-12)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_files_exist(name):
    assert bundled_path(name).is_file()


def test_gain_derived_when_omitted():
    sc = parse_scenario_text(MINIMAL)
    assert sc.control.K == pytest.approx(0.140507, abs=5e-7)


def test_defaults_are_logged(caplog):
    with caplog.at_level(logging.INFO, logger="spinslosh"):
        parse_scenario_text(MINIMAL)
    assert any("fill_ratio" in r.getMessage() and "default" in r.getMessage() for r in caplog.records)


def test_fill_ratio_above_one(tmp_path):
    p = tmp_path / "f.scn"
    p.write_text(MINIMAL.replace("R_t = 0.05", "R_t = 0.05\nfill_ratio = 1.2"))
    with pytest.raises(ValidationError) as ei:
        parse_scenario(p)
    assert "fill_ratio" in ei.value.constraint
    assert str(p) in str(ei.value)


def test_unknown_key_has_location(tmp_path):
    p = tmp_path / "u.scn"
    p.write_text("[tank]\nR_t = 0.05\n\n[fluid]\nrho = 1400\nradius = 3\n")
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(p)
    assert (ei.value.line, ei.value.column) == (6, 1)
    assert str(ei.value).startswith(f"{p}:6:1: ")
    assert "radius" in str(ei.value)


def test_bad_value_points_at_value():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario_text("[tank]\nR_t =   abc\n")
    assert (ei.value.line, ei.value.column) == (2, 9)


def test_unknown_section():
    with pytest.raises(ScenarioError, match="unknown section"):
        parse_scenario_text("[engine]\nthrust = 1\n")


@pytest.mark.parametrize("text, needle", [
    ("[tank]\nR_t = abc\n", "expected a number"),
    ("[tank]\nr_cb = 1, 2\n", "expected 3 values"),
    ("R_t = 1\n", "outside of any"),
    ("[tank]\nR_t = 1\nR_t = 2\n", "duplicate"),
    ("[initial]\nmode = stuck\n", "mode must be"),
])
def test_malformed_values(text, needle):
    with pytest.raises(ScenarioError, match=needle) as ei:
        parse_scenario_text(text)
    assert ei.value.line is not None


@pytest.mark.parametrize("extra, constraint", [
    ("[slosh]\nm0_frac = 1.0\n", "m0_frac"),
    ("[slosh]\nC_f = -1\n", "C_f"),
    ("[slosh]\na_ratio = 1.5\n", None),
    ("[fluid]\nsigma = 0\n", "sigma"),
    ("[inertia]\nJ = 1, 1, -1\n", None),
    ("[simulation]\nt_end = 92.005\n", "t_end"),
    ("[maneuver]\nomega_dot = 0.2\n", "omega_max"),
])
def test_invariant_violations_rejected(extra, constraint):
    with pytest.raises(ValidationError) as ei:
        parse_scenario_text(MINIMAL + extra)
    if constraint:
        assert constraint in ei.value.constraint


def test_inconsistent_gain_rejected():
    with pytest.raises(ValidationError, match="K"):
        parse_scenario_text(MINIMAL + "K = 0.2\n")


def test_structure_inertia():
    sc = parse_scenario_text(MINIMAL + "[inertia]\nm_hub = 1\nr_hub = 0.1\nh_hub = 0.1\n")
    assert sc.inertia.J[2, 2] == pytest.approx(0.5 * 1 * 0.1**2)


def test_unreadable_file(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        parse_scenario(tmp_path / "missing.scn")
