"""Scenario files: INI-style sections in SI units.

Unknown sections or keys are rejected. Missing keys take the defaults in
:data:`DEFAULTS` and a notice is logged for each. A ``[control]`` section
makes the scenario closed-loop; without it the scenario is a
prescribed-motion (open-loop) run.
"""

import configparser
import logging
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .control import ControlSpec, ManeuverProfile
from .coupled import InitialConditions, Scenario
from .exceptions import ScenarioError, ValidationError
from .rigid_body import InertiaModel, StructureSpec, compose_inertia
from .slosh import DEFAULT_F_ADH, FluidProperties, Mode, SloshParams, SurfaceParams, TankGeometry

log = logging.getLogger(__name__)

# values that no default exists for are marked None (derived or optional)
DEFAULTS = {
    "tank": {"R_t": "0.05", "r_cb": "0, 0.2667, 0", "fill_ratio": "0.5", "C_tb": "1,0,0, 0,1,0, 0,0,1"},
    "fluid": {"rho": "1400", "mu": "9.93e-4", "sigma": "0.0135"},
    "slosh": {"m0_frac": "0.78", "a_ratio": "0.81", "b_ratio": None, "C_f": "0.015",
              "f_adh": repr(DEFAULT_F_ADH), "m_tot": None},
    "inertia": {"J": "0.5002, 1.2404, 1.6727", "m_hub": None, "r_hub": None, "h_hub": None,
                "l_beam": None, "m_tip": None},
    "maneuver": {"kind": "spin_up", "omega_max": "1.5", "omega_dot": None, "t_acc": "10",
                 "t_hold": "0", "t_dec": "0", "axis": "0, 0, 1"},
    "control": {"epsilon": "0.7", "omega_n": "0.06", "J_z": None, "omega_nom": None,
                "reference": "step", "K": None},
    "simulation": {"dt_coupling": "0.01", "substeps": "10", "t_end": "92", "seed": "0", "gravity": "0, 0, 0"},
    "initial": {"q": "1, 0, 0, 0", "omega_b": "0, 0, 0", "r_pc_t": "0, 0, 0", "v_rel_t": "0, 0, 0",
                "mode": "free"},
}
_STRUCTURE_KEYS = ("m_hub", "r_hub", "h_hub", "l_beam", "m_tip")
_MODES = {"free": Mode.UNCONSTRAINED, "unconstrained": Mode.UNCONSTRAINED, "constrained": Mode.CONSTRAINED}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*")

BUNDLED = ("closed_loop_spinup.scn", "open_loop_flatspin.scn")


def bundled_path(name):
    """Filesystem path of a scenario shipped with the package."""
    return Path(str(resources.files("spinslosh") / "data" / name))


def _locations(text):
    """Map (section, key) to the 1-based (line, value column) and (section, key, "key") to the key column."""
    loc, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            loc[(section, None)] = (lineno, m.start(1) + 1)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            key = m.group(2).strip()
            loc[(section, key)] = (lineno, m.end() + 1)
            loc[(section, key, "key")] = (lineno, m.start(2) + 1)
    return loc


class _Reader:
    def __init__(self, path, parser, loc):
        self.path, self.parser, self.loc = path, parser, loc

    def _where(self, section, key=None, at_key=False):
        hit = self.loc.get((section, key, "key")) if at_key else None
        return hit or self.loc.get((section, key)) or self.loc.get((section, None)) or (None, None)

    def error(self, msg, section, key=None, at_key=False):
        line, col = self._where(section, key, at_key)
        return ScenarioError(msg, self.path, line, col)

    def raw(self, section, key):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        default = DEFAULTS[section][key]
        if default is not None:
            log.info("%s: [%s] %s not given, using default %s", self.path, section, key, default)
        return default

    def given(self, section, key):
        return self.parser.has_option(section, key)

    def float(self, section, key):
        s = self.raw(section, key)
        if s is None:
            return None
        try:
            return float(s)
        except ValueError:
            raise self.error(f"[{section}] {key}: expected a number, got {s!r}", section, key) from None

    def int(self, section, key):
        s = self.raw(section, key)
        try:
            return int(s)
        except ValueError:
            raise self.error(f"[{section}] {key}: expected an integer, got {s!r}", section, key) from None

    def vec(self, section, key, sizes=(3,)):
        s = self.raw(section, key)
        try:
            vals = [float(x) for x in s.replace(",", " ").split()]
        except ValueError:
            raise self.error(f"[{section}] {key}: expected numbers, got {s!r}", section, key) from None
        if len(vals) not in sizes:
            raise self.error(
                f"[{section}] {key}: expected {' or '.join(map(str, sizes))} values, got {len(vals)}", section, key
            )
        return np.array(vals)

    def str(self, section, key):
        return self.raw(section, key).strip()


def parse_scenario(path):
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", path) from None
    return parse_scenario_text(text, path)


def parse_scenario_text(text, path="<string>"):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioError("key outside of any [section]", path, exc.lineno, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ScenarioError(f"duplicate key {exc.option!r} in [{exc.section}]", path, exc.lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ScenarioError(f"duplicate section [{exc.section}]", path, exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ScenarioError("malformed line (expected 'key = value')", path, lineno, 1) from None
    loc = _locations(text)
    rd = _Reader(path, parser, loc)
    for section in parser.sections():
        if section not in DEFAULTS:
            raise rd.error(f"unknown section [{section}]", section)
        for key in parser.options(section):
            if key not in DEFAULTS[section]:
                raise rd.error(f"unknown key {key!r} in [{section}]", section, key, at_key=True)

    section = None
    try:
        section = "tank"
        C_tb = rd.vec("tank", "C_tb", sizes=(9,)).reshape(3, 3)
        tank = TankGeometry(rd.float("tank", "R_t"), rd.vec("tank", "r_cb"), rd.float("tank", "fill_ratio"), C_tb)
        section = "fluid"
        fluid = FluidProperties(rd.float("fluid", "rho"), rd.float("fluid", "mu"), rd.float("fluid", "sigma"))
        section = "slosh"
        a_ratio = rd.float("slosh", "a_ratio")
        b_ratio = rd.float("slosh", "b_ratio")
        surface = SurfaceParams(a_ratio * tank.R_t, (a_ratio if b_ratio is None else b_ratio) * tank.R_t)
        slosh = SloshParams.for_tank(
            rd.float("slosh", "m0_frac"), rd.float("slosh", "C_f"), tank, fluid, rd.float("slosh", "f_adh")
        )
        m_tot = rd.float("slosh", "m_tot")
        if m_tot is not None:
            slosh = SloshParams(slosh.m0_frac, slosh.C_f, m_tot, slosh.f_adh)
        section = "inertia"
        structure = [k for k in _STRUCTURE_KEYS if rd.given("inertia", k)]
        if structure and not rd.given("inertia", "J"):
            spec = StructureSpec(**{k: rd.float("inertia", k) or 0.0 for k in _STRUCTURE_KEYS})
            inertia = compose_inertia(spec)
        else:
            J = rd.vec("inertia", "J", sizes=(3, 9))
            inertia = InertiaModel(J if J.size == 3 else J.reshape(3, 3))
        closed = parser.has_section("control")
        section = "simulation"
        t_end = rd.float("simulation", "t_end") if (closed or rd.given("simulation", "t_end")) else 150.0
        if not closed and not rd.given("simulation", "t_end"):
            log.info("%s: [simulation] t_end not given, using open-loop default 150", path)
        section = "maneuver"
        omega_max = rd.float("maneuver", "omega_max")
        t_acc = rd.float("maneuver", "t_acc")
        omega_dot = rd.float("maneuver", "omega_dot")
        if omega_dot is None:
            omega_dot = omega_max / t_acc if t_acc > 0 else 0.0
        maneuver = ManeuverProfile(
            rd.str("maneuver", "kind"), omega_max, omega_dot, t_acc, t_end,
            rd.float("maneuver", "t_hold"), rd.float("maneuver", "t_dec"), rd.vec("maneuver", "axis"),
        )
        control = None
        if closed:
            section = "control"
            J_z = rd.float("control", "J_z")
            omega_nom = rd.float("control", "omega_nom")
            control = ControlSpec(
                rd.float("control", "epsilon"), rd.float("control", "omega_n"),
                inertia.J_z if J_z is None else J_z,
                maneuver.omega_max if omega_nom is None else omega_nom,
                rd.str("control", "reference"), rd.float("control", "K"),
            )
        section = "initial"
        mode_s = rd.str("initial", "mode").lower()
        if mode_s not in _MODES:
            raise rd.error(f"[initial] mode must be one of {sorted(_MODES)}, got {mode_s!r}", "initial", "mode")
        q = rd.vec("initial", "q", sizes=(4,))
        initial = InitialConditions(
            q / np.linalg.norm(q), rd.vec("initial", "omega_b"), rd.vec("initial", "r_pc_t"),
            rd.vec("initial", "v_rel_t"), _MODES[mode_s],
        )
        section = "simulation"
        return Scenario(
            tank, fluid, surface, slosh, inertia, maneuver, control,
            dt_coupling=rd.float("simulation", "dt_coupling"), substeps=rd.int("simulation", "substeps"),
            t_end=t_end, seed=rd.int("simulation", "seed"), gravity_i=rd.vec("simulation", "gravity"),
            initial=initial, name=Path(str(path)).stem,
        )
    except ValidationError as exc:
        line, _ = rd._where(section)
        where = f"{path}:{line}" if line else str(path)
        raise ValidationError(f"{where}: [{section}] {exc} (violates {exc.constraint})", exc.constraint) from None
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise rd.error(f"[{section}] {exc}", section) from None


def load_bundled(name):
    return parse_scenario(bundled_path(name))
