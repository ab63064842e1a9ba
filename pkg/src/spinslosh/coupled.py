"""Staggered fluid-structure coupling: closed-loop and prescribed-motion runs."""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .control import ControlSpec, ManeuverProfile, ReferenceMode, rate_controller
from .exceptions import IntegrationDivergedError, ValidationError
from .geometry import (
    as_vec, dcm_t, mv, quat_mul_t, quat_normalize_t, quat_step_t, to_mat_tuple, to_tuple3,
    vadd, vcross, vscale, vsub,
)
from .rigid_body import BodyState, InertiaModel, angular_accel, propagate
from .slosh import (
    BodyMotionInput, EMMConfig, FluidProperties, Mode, SloshParams, SloshState, SloshWrench,
    SurfaceParams, TankGeometry, check_state, decode_events, emm_advance, emm_step, pack_params,
    slosh_wrench, wrench_kernel,
)
from .trace import Trace

log = logging.getLogger(__name__)

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class InitialConditions:
    """Start state. The particle velocity is given relative to the tank wall."""

    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    omega_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_pc_t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_rel_t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mode: Mode = Mode.UNCONSTRAINED


@dataclass(frozen=True)
class Scenario:
    tank: TankGeometry
    fluid: FluidProperties
    surface: SurfaceParams
    slosh: SloshParams
    inertia: InertiaModel
    maneuver: ManeuverProfile
    control: Optional[ControlSpec] = None
    dt_coupling: float = 0.01
    substeps: int = 10
    t_end: float = 150.0
    seed: int = 0
    gravity_i: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initial: InitialConditions = field(default_factory=InitialConditions)
    name: str = ""

    def __post_init__(self):
        if not self.dt_coupling > 0:
            raise ValidationError("dt_coupling must be positive", "dt_coupling > 0")
        if not self.t_end > 0:
            raise ValidationError("t_end must be positive", "t_end > 0")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValidationError("substeps must be an integer >= 1", "substeps >= 1")
        n = round(self.t_end / self.dt_coupling)
        if abs(n * self.dt_coupling - self.t_end) > 1e-9 * self.t_end:
            raise ValidationError(
                f"t_end={self.t_end} is not a whole number of dt_coupling={self.dt_coupling} steps",
                "t_end / dt_coupling integer",
            )
        object.__setattr__(self, "gravity_i", as_vec(self.gravity_i))
        # surface/tank consistency is enforced by EMMConfig
        EMMConfig(self.tank, self.fluid, self.surface, self.slosh)

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt_coupling))

    @property
    def emm(self):
        return EMMConfig(self.tank, self.fluid, self.surface, self.slosh)

    def with_params(self, m0_frac=None, a_ratio=None, C_f=None):
        """Copy with the three sloshing-model parameters replaced (spherical surface when a_ratio is set)."""
        slosh = self.slosh
        if m0_frac is not None or C_f is not None:
            slosh = replace(
                slosh,
                m0_frac=slosh.m0_frac if m0_frac is None else float(m0_frac),
                C_f=slosh.C_f if C_f is None else float(C_f),
            )
        surface = self.surface if a_ratio is None else SurfaceParams.spherical(float(a_ratio) * self.tank.R_t)
        return replace(self, slosh=slosh, surface=surface)


class DimensionlessSet(NamedTuple):
    Oh: float
    Bo_c: float
    Bo_i: float


def dimensionless(fluid, R_t, L, omega, omega_dot):
    """Ohnesorge and centripetal/inertial Bond numbers of a spinning tank."""
    if not fluid.sigma > 0:
        raise ValidationError("surface tension must be positive", "sigma > 0")
    for name, val in (("R_t", R_t), ("L", L), ("omega", omega), ("omega_dot", omega_dot)):
        if val < 0:
            raise ValidationError(f"{name} must be non-negative", f"{name} >= 0")
    rho, sigma, mu = fluid.rho, fluid.sigma, fluid.mu
    return DimensionlessSet(
        math.sqrt(mu * mu / (rho * sigma * R_t)),
        rho * omega * omega * L * R_t * R_t / sigma,
        rho * omega_dot * L * R_t * R_t / sigma,
    )


def scenario_dimensionless(scenario):
    L = float(np.linalg.norm(scenario.tank.r_cb))
    m = scenario.maneuver
    return dimensionless(scenario.fluid, scenario.tank.R_t, L, m.omega_max, m.omega_dot)


# ---------------------------------------------------------------------------
# Reference (pure Python) coupling step
# ---------------------------------------------------------------------------


def _control_law(scenario, t):
    c = scenario.control
    K = c.K

    def u_of(s, omega_b):
        return rate_controller(omega_b[2], c.reference_rate(t + s, scenario.maneuver), K)

    return u_of


def coupled_step(sys, scenario, t, diag=None):
    """One staggered step from ``t`` to ``t + dt_coupling``.

    ``sys`` is ``(BodyState, SloshState, SloshWrench)`` where the wrench is
    the one from the previous step. Returns the updated triple plus the
    control torque issued at ``t`` and the list of particle events.
    """
    body, slosh, prev = sys
    if scenario.control is None:
        raise ValidationError("closed-loop step needs a control spec", "control present")
    dt = scenario.dt_coupling
    J = scenario.inertia
    u_of = _control_law(scenario, t)
    u = u_of(0.0, body.omega_b)
    wd = angular_accel(J, body.omega_b, u * _Z + prev.T)
    motion = BodyMotionInput(body.q, body.omega_b, wd, g_i=scenario.gravity_i)
    cfg = scenario.emm
    slosh, events = emm_step(slosh, motion, dt, cfg, substeps=scenario.substeps, t0=t, diag=diag)
    pred = BodyMotionInput(
        quat_step_t_np(body.q, body.omega_b + 0.5 * dt * wd, dt), body.omega_b + dt * wd, wd,
        g_i=scenario.gravity_i,
    )
    wrench = slosh_wrench(slosh, pred, cfg)
    T_new = wrench.T
    body = propagate(body, lambda s, w: u_of(s, w) * _Z + T_new, J, dt)
    return body, slosh, wrench, u, events


def quat_step_t_np(q, w, dt):
    return np.array(quat_step_t(tuple(float(c) for c in q), to_tuple3(w), float(dt)))


# ---------------------------------------------------------------------------
# Compiled driver
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ref(t, bt, bw):
    """Piecewise-linear reference value and right-continuous slope."""
    n = bt.shape[0]
    if t >= bt[n - 1]:
        return bw[n - 1], 0.0
    k = 0
    while k < n - 2 and t >= bt[k + 1]:
        k += 1
    span = bt[k + 1] - bt[k]
    slope = (bw[k + 1] - bw[k]) / span if span > 0.0 else 0.0
    return bw[k] + slope * (t - bt[k]), slope


@njit(cache=True)
def _ctrl(t, w, K, step_ref, omega_nom, bt, bw):
    if step_ref:
        wr = omega_nom
    else:
        wr = _ref(t, bt, bw)[0]
    return K * (wr - w[2]), wr


@njit(cache=True)
def _euler(w, tau, J, Jinv):
    return mv(Jinv, vsub(tau, vcross(w, mv(J, w))))


@njit(cache=True)
def _qdot(q, w):
    d = quat_mul_t(q, (0.0, w[0], w[1], w[2]))
    return (0.5 * d[0], 0.5 * d[1], 0.5 * d[2], 0.5 * d[3])


@njit(cache=True)
def _qaxpy(q, k, h):
    return (q[0] + h * k[0], q[1] + h * k[1], q[2] + h * k[2], q[3] + h * k[3])


@njit(cache=True)
def _body_rk4(q, w, t, dt, T, J, Jinv, K, step_ref, omega_nom, bt, bw):
    h = 0.5 * dt
    u1 = _ctrl(t, w, K, step_ref, omega_nom, bt, bw)[0]
    k1q = _qdot(q, w)
    k1w = _euler(w, vadd(T, (0.0, 0.0, u1)), J, Jinv)
    w2 = vadd(w, vscale(k1w, h))
    u2 = _ctrl(t + h, w2, K, step_ref, omega_nom, bt, bw)[0]
    k2q = _qdot(_qaxpy(q, k1q, h), w2)
    k2w = _euler(w2, vadd(T, (0.0, 0.0, u2)), J, Jinv)
    w3 = vadd(w, vscale(k2w, h))
    u3 = _ctrl(t + h, w3, K, step_ref, omega_nom, bt, bw)[0]
    k3q = _qdot(_qaxpy(q, k2q, h), w3)
    k3w = _euler(w3, vadd(T, (0.0, 0.0, u3)), J, Jinv)
    w4 = vadd(w, vscale(k3w, dt))
    u4 = _ctrl(t + dt, w4, K, step_ref, omega_nom, bt, bw)[0]
    k4q = _qdot(_qaxpy(q, k3q, dt), w4)
    k4w = _euler(w4, vadd(T, (0.0, 0.0, u4)), J, Jinv)
    c = dt / 6.0
    qn = (
        q[0] + c * (k1q[0] + 2.0 * k2q[0] + 2.0 * k3q[0] + k4q[0]),
        q[1] + c * (k1q[1] + 2.0 * k2q[1] + 2.0 * k3q[1] + k4q[1]),
        q[2] + c * (k1q[2] + 2.0 * k2q[2] + 2.0 * k3q[2] + k4q[2]),
        q[3] + c * (k1q[3] + 2.0 * k2q[3] + 2.0 * k3q[3] + k4q[3]),
    )
    wn = vadd(w, vscale(vadd(vadd(k1w, vscale(vadd(k2w, k3w), 2.0)), k4w), c))
    return quat_normalize_t(qn), wn


@njit(cache=True)
def _drive(
    r, v, mode, q, w, J, Jinv, K, step_ref, omega_nom, bt, bw, axis, prescribed,
    n, dt, nsub, p, out, out_q, out_mode, ev_kind, ev_time, diag,
):
    """Run ``n`` coupling steps, writing rows 0..n of the output buffers.

    ``out`` columns: t, F(3), T(3), w(3), w_ref, u, r(3), v(3), lambda.
    Returns (rows written, events seen, finite).
    """
    zero = (0.0, 0.0, 0.0)
    n_ev = 0
    wd = zero
    u = 0.0
    wr = 0.0
    if prescribed:
        sl = _ref(0.5 * dt, bt, bw)[1]
        wr = _ref(0.0, bt, bw)[0]
        w = vscale(axis, wr)
        wd = vscale(axis, sl)
    else:
        u, wr = _ctrl(0.0, w, K, step_ref, omega_nom, bt, bw)
        wd = _euler(w, (0.0, 0.0, u), J, Jinv)
    F, T, lam = wrench_kernel(r, v, mode, q, w, wd, zero, zero, p)
    for k in range(n + 1):
        t = k * dt
        if prescribed:
            sl = _ref(t + 0.5 * dt, bt, bw)[1]
            wr = _ref(t, bt, bw)[0]
            w = vscale(axis, wr)
            wd = vscale(axis, sl)
        else:
            u, wr = _ctrl(t, w, K, step_ref, omega_nom, bt, bw)
            wd = _euler(w, vadd(T, (0.0, 0.0, u)), J, Jinv)
        row = out[k]
        row[0] = t
        for j in range(3):
            row[1 + j] = F[j]
            row[4 + j] = T[j]
            row[7 + j] = w[j]
            row[12 + j] = r[j]
            row[15 + j] = v[j]
        row[10] = wr
        row[11] = u
        row[18] = lam
        for j in range(4):
            out_q[k, j] = q[j]
        out_mode[k] = mode
        if k == n:
            break
        if p.m_p > 0.0:
            r, v, mode, n_ev, ok = emm_advance(r, v, mode, t, q, w, wd, zero, zero, dt, nsub, p, ev_kind, ev_time, n_ev, diag)
            if not ok:
                return k + 1, n_ev, False
        if prescribed:
            q1 = quat_step_t(q, vadd(w, vscale(wd, 0.5 * dt)), dt)
            w1 = vscale(axis, _ref(t + dt, bt, bw)[0])
            F, T, lam = wrench_kernel(r, v, mode, q1, vadd(w, vscale(wd, dt)), wd, zero, zero, p)
            q = q1
            w = w1
        else:
            qp = quat_step_t(q, vadd(w, vscale(wd, 0.5 * dt)), dt)
            F, T, lam = wrench_kernel(r, v, mode, qp, vadd(w, vscale(wd, dt)), wd, zero, zero, p)
            q, w = _body_rk4(q, w, t, dt, T, J, Jinv, K, step_ref, omega_nom, bt, bw)
        if not (math.isfinite(w[0]) and math.isfinite(w[1]) and math.isfinite(w[2]) and math.isfinite(q[0])):
            return k + 1, n_ev, False
    return n + 1, n_ev, True


def initial_states(scenario):
    """Body and particle states at t = 0 (particle velocity from the wall velocity plus v_rel)."""
    ic = scenario.initial
    body = BodyState(np.array(ic.q, dtype=float), np.array(ic.omega_b, dtype=float))
    if scenario.control is None:
        w0 = scenario.maneuver.breakpoints()[1][0]
        body.omega_b = w0 * scenario.maneuver.axis
    tank = scenario.tank
    r = np.asarray(ic.r_pc_t, dtype=float)
    C_ib = np.array(dcm_t(tuple(body.q)))
    r_b = tank.r_cb + tank.C_tb.T @ r
    v = C_ib @ (np.cross(body.omega_b, r_b) + tank.C_tb.T @ np.asarray(ic.v_rel_t, dtype=float))
    slosh = SloshState(r, v, Mode(ic.mode))
    check_state(slosh, scenario.surface)
    return body, slosh


def _run(scenario, prescribed):
    n = scenario.n_steps
    dt = scenario.dt_coupling
    body, slosh = initial_states(scenario)
    p = pack_params(scenario.emm, scenario.gravity_i)
    J = scenario.inertia
    bt, bw = scenario.maneuver.breakpoints()
    if prescribed:
        K, step_ref, omega_nom = 0.0, False, 0.0
    else:
        c = scenario.control
        K, step_ref, omega_nom = float(c.K), c.reference == ReferenceMode.STEP, float(c.omega_nom)
    out = np.zeros((n + 1, 19))
    out_q = np.zeros((n + 1, 4))
    out_mode = np.zeros(n + 1, dtype=np.int64)
    cap = 64 + 4 * n
    ev_kind = np.zeros(cap, dtype=np.int64)
    ev_time = np.zeros(cap)
    diag = np.zeros(3)
    t0 = time.perf_counter()
    rows, n_ev, ok = _drive(
        to_tuple3(slosh.r_pc_t), to_tuple3(slosh.v_p_i), int(slosh.mode),
        tuple(float(c) for c in body.q), to_tuple3(body.omega_b),
        to_mat_tuple(J.J), to_mat_tuple(J.J_inv), K, step_ref, omega_nom, bt, bw,
        to_tuple3(scenario.maneuver.axis), prescribed, n, float(dt), int(scenario.substeps), p,
        out, out_q, out_mode, ev_kind, ev_time, diag,
    )
    wall = time.perf_counter() - t0
    if n_ev > cap:
        log.warning("event log truncated: %d events, %d kept", n_ev, cap)
    trace = Trace.from_arrays(
        out[:rows, 0], out[:rows, 1:4], out[:rows, 4:7], out[:rows, 7:10], out_q[:rows],
        out[:rows, 10], out[:rows, 11], out[:rows, 12:15], out[:rows, 15:18],
        out_mode[:rows].astype(float), out[:rows, 18],
        events=decode_events(ev_kind, ev_time, n_ev),
        meta={
            "kind": "open_loop" if prescribed else "closed_loop",
            "scenario": scenario.name,
            "wall_clock_s": wall,
            "max_abs_C": float(diag[0]),
            "max_accel_residual": float(diag[1]),
            "constrained_evals": int(diag[2]),
        },
    )
    if not ok:
        raise IntegrationDivergedError(
            f"integration diverged near t = {(rows - 1) * dt:.6g} s", t=(rows - 1) * dt, record=trace
        )
    return trace


def run_closed_loop(scenario):
    """Closed-loop run: the body responds to control and slosh torques."""
    if scenario.control is None:
        raise ValidationError("closed-loop run needs a control spec", "control present")
    return _run(scenario, prescribed=False)


def run_open_loop(scenario):
    """Prescribed-motion run: body rate follows the maneuver profile exactly."""
    return _run(scenario, prescribed=True)


def settled_force(scenario, omega=None):
    """Centrifugal balance of both mass partitions at rate ``omega`` about the spin axis."""
    s = scenario.slosh
    if omega is None:
        omega = scenario.control.omega_nom if scenario.control is not None else scenario.maneuver.omega_max
    L = float(np.linalg.norm(scenario.tank.r_cb))
    # particle rests at the far apex of the surface (radial semi-axis along r_cb)
    e = scenario.tank.C_tb @ (scenario.tank.r_cb / L) if L > 0 else np.zeros(3)
    ext = math.sqrt((e[0] / scenario.surface.a) ** 2 + (e[1] ** 2 + e[2] ** 2) / scenario.surface.b ** 2)
    reach = 1.0 / ext if ext > 0 else 0.0
    return s.m_p * omega**2 * (L + reach) + s.m0 * omega**2 * L
