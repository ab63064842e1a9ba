"""Constraint-surface sloshing model.

The liquid is split into a stationary mass ``m0`` rigidly attached at the
tank center and a moving particle ``m_p``. The particle either flies freely
inside the tank (``Mode.UNCONSTRAINED``, only gravity acts) or slides on the
ellipsoid of revolution

    C(r) = r^T W r - 1,    W = diag(a^-2, b^-2, b^-2)

(``Mode.CONSTRAINED``), held there by a Lagrange multiplier and damped by a
viscous wall-friction term. Positions are kept in the tank frame F_t,
velocities in the inertial frame F_i.

Frames: C_{t<-b} is the constant tank mounting DCM, C_{t<-i} = C_{t<-b} C_{b<-i}.
The tank center sits at ``r_cb`` in the body frame.

Mode switching: a collision (C crosses zero with outward relative normal
velocity) is a fully inelastic impact into constrained sliding; separation
happens when the wall would have to pull on the particle with more than
``f_adh``. Interior points have C < 0.
"""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from numba import njit

from .exceptions import (
    IntegrationDivergedError,
    SingularConstraintError,
    UndefinedNormalError,
    ValidationError,
)
from .geometry import (
    as_quat,
    as_vec,
    dcm_t,
    mm,
    mtranspose,
    mtv,
    mv,
    quat_step_t,
    to_mat_tuple,
    to_tuple3,
    vadd,
    vcross,
    vdot,
    vnorm,
    vscale,
    vsub,
)

# Friction gap (R_t - |r|) is clamped below at this fraction of R_t.
TINY = 1e-150
GAP_CLAMP = 0.01
EVENT_TOL = 1e-10
MAX_BISECT = 60
MAX_EVENTS_PER_SUBSTEP = 8
DEFAULT_F_ADH = 1e-8
CONSTRAINT_TOL = 1e-8

_UNCONSTRAINED = 0
_CONSTRAINED = 1
_EV_COLLISION = 1
_EV_SEPARATION = 2


class Mode(enum.IntEnum):
    UNCONSTRAINED = _UNCONSTRAINED
    CONSTRAINED = _CONSTRAINED


class EventKind(str, enum.Enum):
    COLLISION = "collision"
    SEPARATION = "separation"


_EVENT_CODES = {_EV_COLLISION: EventKind.COLLISION, _EV_SEPARATION: EventKind.SEPARATION}


class Event(NamedTuple):
    kind: EventKind
    t: float


# ---------------------------------------------------------------------------
# Model description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TankGeometry:
    """Spherical tank of radius ``R_t`` centred at ``r_cb`` (body frame, m)."""

    R_t: float
    r_cb: np.ndarray
    fill_ratio: float
    C_tb: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "r_cb", as_vec(self.r_cb))
        C = np.asarray(self.C_tb, dtype=float)
        object.__setattr__(self, "C_tb", C)
        if not self.R_t > 0:
            raise ValidationError(f"tank radius must be positive, got {self.R_t}", "R_t > 0")
        if not 0 < self.fill_ratio < 1:
            raise ValidationError(
                f"fill ratio must lie in (0, 1), got {self.fill_ratio}", "0 < fill_ratio < 1"
            )
        if C.shape != (3, 3) or np.max(np.abs(C @ C.T - np.eye(3))) > 1e-9 or abs(np.linalg.det(C) - 1) > 1e-9:
            raise ValidationError("C_tb must be a proper rotation matrix", "C_tb orthonormal")

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi * self.R_t**3


@dataclass(frozen=True)
class FluidProperties:
    rho: float
    mu: float
    sigma: float

    def __post_init__(self):
        for name in ("rho", "mu", "sigma"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"fluid {name} must be positive", f"{name} > 0")


@dataclass(frozen=True)
class SurfaceParams:
    """Semi-axes of the constraint ellipsoid: ``a`` along tank x, ``b`` along y and z."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("surface semi-axes must be positive", "a > 0, b > 0")

    @classmethod
    def spherical(cls, radius):
        return cls(radius, radius)

    @property
    def W(self):
        return np.diag([self.a**-2, self.b**-2, self.b**-2])


@dataclass(frozen=True)
class SloshParams:
    m0_frac: float
    C_f: float
    m_tot: float
    f_adh: float = DEFAULT_F_ADH

    def __post_init__(self):
        if not 0 <= self.m0_frac < 1:
            raise ValidationError(f"m0 fraction must lie in [0, 1), got {self.m0_frac}", "0 <= m0_frac < 1")
        if not self.C_f >= 0:
            raise ValidationError("friction coefficient must be non-negative", "C_f >= 0")
        if not self.f_adh >= 0:
            raise ValidationError("adhesion threshold must be non-negative", "f_adh >= 0")
        if not self.m_tot >= 0:
            raise ValidationError("liquid mass must be non-negative", "m_tot >= 0")

    @classmethod
    def for_tank(cls, m0_frac, C_f, tank, fluid, f_adh=DEFAULT_F_ADH):
        return cls(m0_frac, C_f, fluid.rho * tank.fill_ratio * tank.volume, f_adh)

    @property
    def m0(self):
        return self.m0_frac * self.m_tot

    @property
    def m_p(self):
        return self.m_tot - self.m0


@dataclass(frozen=True)
class EMMConfig:
    tank: TankGeometry
    fluid: FluidProperties
    surface: SurfaceParams
    slosh: SloshParams

    def __post_init__(self):
        if self.surface.a > self.tank.R_t or self.surface.b > self.tank.R_t:
            raise ValidationError(
                f"constraint surface (a={self.surface.a}, b={self.surface.b}) exceeds tank radius {self.tank.R_t}",
                "a <= R_t, b <= R_t",
            )

    @classmethod
    def spherical(cls, tank, fluid, m0_frac, a_ratio, C_f, f_adh=DEFAULT_F_ADH, m_tot=None):
        slosh = SloshParams.for_tank(m0_frac, C_f, tank, fluid, f_adh)
        if m_tot is not None:
            slosh = replace(slosh, m_tot=m_tot)
        return cls(tank, fluid, SurfaceParams.spherical(a_ratio * tank.R_t), slosh)


@dataclass
class SloshState:
    r_pc_t: np.ndarray
    v_p_i: np.ndarray
    mode: Mode = Mode.UNCONSTRAINED

    def __post_init__(self):
        self.r_pc_t = as_vec(self.r_pc_t)
        self.v_p_i = as_vec(self.v_p_i)
        self.mode = Mode(self.mode)


@dataclass
class BodyMotionInput:
    """Known spacecraft motion driving the particle.

    ``q`` is the body attitude (C_{i<-b} = dcm_from_quat(q)); rates and
    accelerations of the body origin are inertial, angular ones body-frame.
    """

    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    omega_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_b_i: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_b_i: np.ndarray = field(default_factory=lambda: np.zeros(3))
    g_i: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = as_quat(self.q)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValidationError("body attitude quaternion must be unit norm", "|q| = 1")
        self.q = q
        for name in ("omega_b", "omega_dot_b", "v_b_i", "a_b_i", "g_i"):
            setattr(self, name, as_vec(getattr(self, name)))


@dataclass
class ConstraintSolve:
    v_dot_p: np.ndarray
    lam: float
    f_c: np.ndarray
    f_f: np.ndarray
    beta: float
    # Lambda_p . v_dot_p + beta, zero up to round-off
    residual: float = 0.0


@dataclass
class SloshWrench:
    F: np.ndarray
    T: np.ndarray


# ---------------------------------------------------------------------------
# Compiled kernel (tuples in, tuples out)
# ---------------------------------------------------------------------------


class _Params(NamedTuple):
    a: float
    b: float
    R_t: float
    m_p: float
    m0: float
    C_f: float
    mu: float
    f_adh: float
    r_cb: tuple
    g_i: tuple
    C_tb: tuple


def pack_params(cfg, g_i=(0.0, 0.0, 0.0)):
    s = cfg.slosh
    return _Params(
        float(cfg.surface.a),
        float(cfg.surface.b),
        float(cfg.tank.R_t),
        float(s.m_p),
        float(s.m0),
        float(s.C_f),
        float(cfg.fluid.mu),
        float(s.f_adh),
        to_tuple3(cfg.tank.r_cb),
        to_tuple3(g_i),
        to_mat_tuple(cfg.tank.C_tb),
    )


_jit = njit(cache=True)


@_jit
def _cval(r, p):
    return (r[0] * r[0]) / (p.a * p.a) + (r[1] * r[1] + r[2] * r[2]) / (p.b * p.b) - 1.0


@_jit
def _grad(r, p):
    return (2.0 * r[0] / (p.a * p.a), 2.0 * r[1] / (p.b * p.b), 2.0 * r[2] / (p.b * p.b))


@_jit
def _unit_normal(r, p):
    g = _grad(r, p)
    return vscale(g, 1.0 / vnorm(g))


@_jit
def _body_at(q0, w0, wd, vb0, ab, s):
    """Body state ``s`` seconds into a step with constant angular acceleration."""
    if s == 0.0:
        return q0, w0, vb0
    q = quat_step_t(q0, vadd(w0, vscale(wd, 0.5 * s)), s)
    return q, vadd(w0, vscale(wd, s)), vadd(vb0, vscale(ab, s))


@_jit
def _c_ti(q, p):
    return mm(p.C_tb, mtranspose(dcm_t(q)))


@_jit
def _rdot(r, v, C_ti, w, vb, p):
    """Particle velocity relative to the tank, tank frame."""
    r_b = vadd(p.r_cb, mtv(p.C_tb, r))
    return vsub(mv(C_ti, vsub(v, vb)), mv(p.C_tb, vcross(w, r_b)))


@_jit
def _jac(r, C_ti, p):
    g = _grad(r, p)
    lp = mtv(C_ti, g)
    lw = vadd(mtv(p.C_tb, vcross(g, r)), vcross(mtv(p.C_tb, g), p.r_cb))
    return vscale(lp, -1.0), lw, lp


@_jit
def _jac_rate(r, rd, C_ti, w, p):
    g = _grad(r, p)
    gd = _grad(rd, p)
    w_t = mv(p.C_tb, w)
    lpd = mtv(C_ti, vadd(gd, vcross(w_t, g)))
    lwd = vadd(
        vadd(mtv(p.C_tb, vcross(gd, r)), vcross(mtv(p.C_tb, gd), p.r_cb)),
        mtv(p.C_tb, vcross(g, rd)),
    )
    return vscale(lpd, -1.0), lwd, lpd


@_jit
def _friction_t(rd_par, r, p):
    gap = p.R_t - vnorm(r)
    gmin = GAP_CLAMP * p.R_t
    if gap < gmin:
        gap = gmin
    return vscale(rd_par, -p.C_f * p.mu * p.m_p / (gap * gap))


@_jit
def _solve(r, v, C_ti, rd, w, wd, vb, ab, p):
    lt, lw, lp = _jac(r, C_ti, p)
    ltd, lwd, lpd = _jac_rate(r, rd, C_ti, w, p)
    beta = vdot(lt, ab) + vdot(lw, wd) + vdot(lpd, v) + vdot(ltd, vb) + vdot(lwd, w)
    n = _unit_normal(r, p)
    rd_par = vsub(rd, vscale(n, vdot(rd, n)))
    ff = mtv(C_ti, _friction_t(rd_par, r, p))
    fa = vadd(vscale(p.g_i, p.m_p), ff)
    inv_m = 1.0 / p.m_p
    lam = -(inv_m * vdot(lp, fa) + beta) / (inv_m * vdot(lp, lp))
    fc = vscale(lp, lam)
    acc = vscale(vadd(fa, fc), inv_m)
    resid = vdot(lp, acc) + beta
    return acc, lam, fc, ff, beta, resid


@_jit
def _frame(q0, w0, wd, vb0, ab, s, p):
    """(C_ti, omega_b, v_b) of the body ``s`` seconds into the step."""
    q, w, vb = _body_at(q0, w0, wd, vb0, ab, s)
    return _c_ti(q, p), w, vb


@_jit
def _deriv(r, v, mode, fr, wd, ab, p, diag):
    C_ti, w, vb = fr
    rd = _rdot(r, v, C_ti, w, vb, p)
    if mode == _CONSTRAINED:
        acc, lam, fc, ff, beta, resid = _solve(r, v, C_ti, rd, w, wd, vb, ab, p)
        resid = abs(resid)
        if resid > diag[1]:
            diag[1] = resid
        diag[2] += 1.0
        return rd, acc
    return rd, p.g_i


@_jit
def _rk4(r, v, mode, s, h, f0, k1r, k1v, q0, w0, wd, vb0, ab, p, diag):
    """One RK4 step of length ``h`` from ``s``.

    ``f0`` and ``(k1r, k1v)`` are the body frame and state slope at ``s``,
    which callers usually already hold. Also returns the frame at ``s + h``.
    """
    hh = 0.5 * h
    fm = _frame(q0, w0, wd, vb0, ab, s + hh, p)
    f1 = _frame(q0, w0, wd, vb0, ab, s + h, p)
    k2r, k2v = _deriv(vadd(r, vscale(k1r, hh)), vadd(v, vscale(k1v, hh)), mode, fm, wd, ab, p, diag)
    k3r, k3v = _deriv(vadd(r, vscale(k2r, hh)), vadd(v, vscale(k2v, hh)), mode, fm, wd, ab, p, diag)
    k4r, k4v = _deriv(vadd(r, vscale(k3r, h)), vadd(v, vscale(k3v, h)), mode, f1, wd, ab, p, diag)
    h6 = h / 6.0
    r1 = vadd(r, vscale(vadd(vadd(k1r, vscale(k2r, 2.0)), vadd(vscale(k3r, 2.0), k4r)), h6))
    v1 = vadd(v, vscale(vadd(vadd(k1v, vscale(k2v, 2.0)), vadd(vscale(k3v, 2.0), k4v)), h6))
    return r1, v1, f1


@_jit
def _project(r, v, fr, p):
    """Put the particle back on the surface along the gradient and strip normal relative velocity."""
    for _ in range(8):
        c = _cval(r, p)
        if abs(c) < 1e-15:
            break
        g = _grad(r, p)
        r = vsub(r, vscale(g, c / vdot(g, g)))
    C_ti, w, vb = fr
    rd = _rdot(r, v, C_ti, w, vb, p)
    n = _unit_normal(r, p)
    v = vsub(v, mtv(C_ti, vscale(n, vdot(rd, n))))
    return r, v


@_jit
def _tensile_load(r, v, fr, wd, ab, p, diag):
    """Outward component of the wall force on a constrained particle, plus the state slope there."""
    C_ti, w, vb = fr
    rd = _rdot(r, v, C_ti, w, vb, p)
    acc, lam, fc, ff, beta, resid = _solve(r, v, C_ti, rd, w, wd, vb, ab, p)
    resid = abs(resid)
    if resid > diag[1]:
        diag[1] = resid
    diag[2] += 1.0
    return vdot(mtv(C_ti, _unit_normal(r, p)), fc), rd, acc


@_jit
def _impact(v, v_wall, n):
    return vsub(v, vscale(n, vdot(vsub(v, v_wall), n)))


@_jit
def _record(ev_kind, ev_time, n_ev, kind, t):
    if n_ev < ev_kind.shape[0]:
        ev_kind[n_ev] = kind
        ev_time[n_ev] = t
    return n_ev + 1


@_jit
def _interval(r, v, mode, s0, h, fs, k1r, k1v, have_k1, t0, q0, w0, wd, vb0, ab, p, ev_kind, ev_time, n_ev, diag):
    """Advance over [s0, s0 + h], switching mode at collision and separation.

    ``fs`` is the body frame at ``s0``; ``(k1r, k1v)`` the state slope
    there when ``have_k1``. Returns the state, event count, and the frame
    and (if known) slope at the end, for reuse by the next substep.
    """
    s = s0
    remaining = h
    for _ in range(MAX_EVENTS_PER_SUBSTEP):
        if remaining <= 0.0:
            return r, v, mode, n_ev, fs, k1r, k1v, have_k1
        if not have_k1:
            k1r, k1v = _deriv(r, v, mode, fs, wd, ab, p, diag)
        have_k1 = False
        r1, v1, f1 = _rk4(r, v, mode, s, remaining, fs, k1r, k1v, q0, w0, wd, vb0, ab, p, diag)
        if mode == _UNCONSTRAINED:
            if _cval(r1, p) < 0.0:
                return r1, v1, mode, n_ev, f1, k1r, k1v, False
            lo = 0.0
            hi = 1.0
            rh = r1
            vh = v1
            fh = f1
            for _ in range(MAX_BISECT):
                mid = 0.5 * (lo + hi)
                rm, vm, fm = _rk4(r, v, mode, s, mid * remaining, fs, k1r, k1v, q0, w0, wd, vb0, ab, p, diag)
                cm = _cval(rm, p)
                if cm >= 0.0 or -cm < EVENT_TOL:
                    hi = mid
                    rh = rm
                    vh = vm
                    fh = fm
                    if abs(cm) < EVENT_TOL:
                        break
                else:
                    lo = mid
            te = s + hi * remaining
            C_ti, w, vb = fh
            rd = _rdot(rh, vh, C_ti, w, vb, p)
            n = _unit_normal(rh, p)
            if vdot(rd, n) > 0.0:
                v_wall = vsub(vh, mtv(C_ti, rd))
                vh = _impact(vh, v_wall, mtv(C_ti, n))
                rh, vh = _project(rh, vh, fh, p)
                mode = _CONSTRAINED
                n_ev = _record(ev_kind, ev_time, n_ev, _EV_COLLISION, t0 + te)
            r = rh
            v = vh
            fs = fh
            remaining -= te - s
            s = te
        else:
            r1, v1 = _project(r1, v1, f1, p)
            c1 = abs(_cval(r1, p))
            if c1 > diag[0]:
                diag[0] = c1
            load, rd1, acc1 = _tensile_load(r1, v1, f1, wd, ab, p, diag)
            if not load - p.f_adh > 0.0:
                return r1, v1, mode, n_ev, f1, rd1, acc1, True
            lo = 0.0
            hi = 1.0
            rh = r1
            vh = v1
            fh = f1
            for _ in range(MAX_BISECT):
                mid = 0.5 * (lo + hi)
                rm, vm, fm = _rk4(r, v, mode, s, mid * remaining, fs, k1r, k1v, q0, w0, wd, vb0, ab, p, diag)
                rm, vm = _project(rm, vm, fm, p)
                lm = _tensile_load(rm, vm, fm, wd, ab, p, diag)[0] - p.f_adh
                if lm > 0.0:
                    hi = mid
                    rh = rm
                    vh = vm
                    fh = fm
                    if lm < EVENT_TOL:
                        break
                else:
                    lo = mid
            te = s + hi * remaining
            mode = _UNCONSTRAINED
            n_ev = _record(ev_kind, ev_time, n_ev, _EV_SEPARATION, t0 + te)
            r = rh
            v = vh
            fs = fh
            remaining -= te - s
            s = te
    # event budget exhausted: finish the interval without switching
    if remaining > 0.0:
        k1r, k1v = _deriv(r, v, mode, fs, wd, ab, p, diag)
        r, v, fs = _rk4(r, v, mode, s, remaining, fs, k1r, k1v, q0, w0, wd, vb0, ab, p, diag)
        if mode == _CONSTRAINED:
            r, v = _project(r, v, fs, p)
    return r, v, mode, n_ev, fs, k1r, k1v, False


@njit(cache=True)
def _finite(a):
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


@_jit
def _flush(a):
    # subnormal tails from friction decay are meaningless and very slow on most CPUs
    x, y, z = a
    return (
        0.0 if abs(x) < TINY else x,
        0.0 if abs(y) < TINY else y,
        0.0 if abs(z) < TINY else z,
    )


@njit(cache=True)
def emm_advance(r, v, mode, t0, q0, w0, wd, vb0, ab, dt, nsub, p, ev_kind, ev_time, n_ev, diag):
    """Advance the particle over ``dt`` in ``nsub`` RK4 substeps.

    ``diag`` accumulates [max |C| after projection, max acceleration-level
    residual, number of constrained evaluations]. Returns the new
    (r, v, mode, n_ev, ok).
    """
    h = dt / nsub
    fs = _frame(q0, w0, wd, vb0, ab, 0.0, p)
    k1r = (0.0, 0.0, 0.0)
    k1v = (0.0, 0.0, 0.0)
    have_k1 = False
    for j in range(nsub):
        r, v, mode, n_ev, fs, k1r, k1v, have_k1 = _interval(
            r, v, mode, j * h, h, fs, k1r, k1v, have_k1, t0, q0, w0, wd, vb0, ab, p, ev_kind, ev_time, n_ev, diag
        )
        r = _flush(r)
        v = _flush(v)
        if not (_finite(r) and _finite(v)):
            return r, v, mode, n_ev, False
    return r, v, mode, n_ev, True


@njit(cache=True)
def wrench_kernel(r, v, mode, q, w, wd, vb, ab, p):
    """(F_b, T_b, lambda) exerted by the liquid on the spacecraft, about the body origin."""
    C_ib = dcm_t(q)
    F = (0.0, 0.0, 0.0)
    T = (0.0, 0.0, 0.0)
    lam = 0.0
    if mode == _CONSTRAINED and p.m_p > 0.0:
        C_ti = mm(p.C_tb, mtranspose(C_ib))
        rd = _rdot(r, v, C_ti, w, vb, p)
        acc, lam, fc, ff, beta, resid = _solve(r, v, C_ti, rd, w, wd, vb, ab, p)
        F = vscale(mtv(C_ib, vadd(fc, ff)), -1.0)
        T = vcross(vadd(p.r_cb, mtv(p.C_tb, r)), F)
    if p.m0 > 0.0:
        a_c = vadd(mtv(C_ib, ab), vadd(vcross(wd, p.r_cb), vcross(w, vcross(w, p.r_cb))))
        F0 = vscale(vsub(mtv(C_ib, p.g_i), a_c), p.m0)
        F = vadd(F, F0)
        T = vadd(T, vcross(p.r_cb, F0))
    return F, T, lam


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _surface_params(surface, tank=None):
    """Minimal packed params for geometric queries."""
    R_t = tank.R_t if tank is not None else max(surface.a, surface.b)
    r_cb = to_tuple3(tank.r_cb) if tank is not None else (0.0, 0.0, 0.0)
    C_tb = to_mat_tuple(tank.C_tb) if tank is not None else to_mat_tuple(np.eye(3))
    return _Params(float(surface.a), float(surface.b), float(R_t), 0.0, 0.0, 0.0, 0.0, 0.0, r_cb, (0.0, 0.0, 0.0), C_tb)


def _body_tuples(body):
    return (
        tuple(float(c) for c in body.q),
        to_tuple3(body.omega_b),
        to_tuple3(body.omega_dot_b),
        to_tuple3(body.v_b_i),
        to_tuple3(body.a_b_i),
    )


def constraint_value(r_pc_t, surface):
    """r^T W r - 1: negative inside the surface, zero on it, positive outside."""
    return float(_cval(to_tuple3(as_vec(r_pc_t)), _surface_params(surface)))


def surface_normal(r_pc_t, surface):
    """Outward unit normal (tank frame) at a point on or near the surface."""
    r = as_vec(r_pc_t)
    if not np.any(r):
        raise UndefinedNormalError("surface normal is undefined at the tank center")
    c = constraint_value(r, surface)
    if abs(c) >= 1e-6:
        raise ValidationError(f"point is not on the constraint surface (C = {c:.3g})", "|C(r)| < 1e-6")
    return np.array(_unit_normal(to_tuple3(r), _surface_params(surface)))


def split_velocity(v, e_n):
    """Split ``v`` into its scalar outward normal part and the tangential remainder."""
    v = as_vec(v)
    e_n = as_vec(e_n)
    v_perp = float(v @ e_n)
    return v_perp, v - v_perp * e_n


def friction_force(v_par, r_pc_t, slosh, fluid, tank):
    """Viscous wall friction on the particle, tank frame (N)."""
    p = _Params(0.0, 0.0, float(tank.R_t), float(slosh.m_p), 0.0, float(slosh.C_f), float(fluid.mu), 0.0,
                (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), to_mat_tuple(np.eye(3)))
    return np.array(_friction_t(to_tuple3(as_vec(v_par)), to_tuple3(as_vec(r_pc_t)), p))


def relative_velocity(state, body, tank):
    """Particle velocity relative to the tank wall, in the tank frame."""
    p = _surface_params(SurfaceParams(1.0, 1.0), tank)
    q, w, _, vb, _ = _body_tuples(body)
    C_ti = _c_ti(q, p)
    return np.array(_rdot(to_tuple3(state.r_pc_t), to_tuple3(state.v_p_i), C_ti, w, vb, p))


def jacobian(state, body, tank, surface):
    """Velocity-level constraint Jacobian split as (Lambda_k, Lambda_p).

    Lambda_k multiplies [v_b_i; omega_b] (6 entries) and Lambda_p the
    particle inertial velocity.
    """
    p = _surface_params(surface, tank)
    C_ti = _c_ti(tuple(float(c) for c in body.q), p)
    lt, lw, lp = _jac(to_tuple3(state.r_pc_t), C_ti, p)
    return np.concatenate([lt, lw]), np.array(lp)


def jacobian_rate(state, body, tank, surface):
    p = _surface_params(surface, tank)
    q, w, _, vb, _ = _body_tuples(body)
    C_ti = _c_ti(q, p)
    r = to_tuple3(state.r_pc_t)
    rd = _rdot(r, to_tuple3(state.v_p_i), C_ti, w, vb, p)
    ltd, lwd, lpd = _jac_rate(r, rd, C_ti, w, p)
    return np.concatenate([ltd, lwd]), np.array(lpd)


def beta(state, body, tank, surface):
    """Velocity-product and known-acceleration part of the acceleration constraint."""
    lk, _ = jacobian(state, body, tank, surface)
    lkd, lpd = jacobian_rate(state, body, tank, surface)
    nu_k = np.concatenate([body.v_b_i, body.omega_b])
    nu_k_dot = np.concatenate([body.a_b_i, body.omega_dot_b])
    return float(lk @ nu_k_dot + lpd @ state.v_p_i + lkd @ nu_k)


def constrained_accel(state, body, cfg, f_g=None, f_f=None):
    """Solve the augmented Newton/constraint system for the sliding particle.

    ``f_g`` and ``f_f`` (inertial frame) default to the model's gravity and
    friction forces at the current state.
    """
    if not cfg.slosh.m_p > 0:
        raise ValidationError("constrained dynamics need a positive moving mass", "m_p > 0")
    p = pack_params(cfg, body.g_i)
    q, w, wd, vb, ab = _body_tuples(body)
    r = to_tuple3(state.r_pc_t)
    v = to_tuple3(state.v_p_i)
    C_ti = _c_ti(q, p)
    rd = _rdot(r, v, C_ti, w, vb, p)
    lt, lw, lp = _jac(r, C_ti, p)
    ltd, lwd, lpd = _jac_rate(r, rd, C_ti, w, p)
    b = vdot(lt, ab) + vdot(lw, wd) + vdot(lpd, v) + vdot(ltd, vb) + vdot(lwd, w)
    lp = np.array(lp)
    den = lp @ lp / cfg.slosh.m_p
    if den == 0.0:
        raise SingularConstraintError("constraint Jacobian vanishes (particle at the tank center?)")
    if f_g is None:
        f_g = cfg.slosh.m_p * body.g_i
    if f_f is None:
        n = np.array(_unit_normal(r, p))
        _, v_par = split_velocity(np.array(rd), n)
        C_it = np.array(C_ti).T
        f_f = C_it @ friction_force(v_par, state.r_pc_t, cfg.slosh, cfg.fluid, cfg.tank)
    fa = np.asarray(f_g, dtype=float) + np.asarray(f_f, dtype=float)
    lam = -(lp @ fa / cfg.slosh.m_p + b) / den
    f_c = lp * lam
    acc = (fa + f_c) / cfg.slosh.m_p
    return ConstraintSolve(acc, float(lam), f_c, np.asarray(f_f, dtype=float), float(b), float(lp @ acc + b))


def unconstrained_accel(body):
    return np.array(body.g_i, dtype=float)


def impact(v_p_i, v_wall_i, e_n_i):
    """Fully inelastic impact: remove the normal velocity relative to the wall."""
    return np.array(_impact(to_tuple3(as_vec(v_p_i)), to_tuple3(as_vec(v_wall_i)), to_tuple3(as_vec(e_n_i))))


def separation_check(solve, e_n_i, f_adh):
    """True when ``-e_n . f_c > f_adh``.

    ``e_n_i`` is the inertial-frame surface normal pointing into the
    interior (the direction in which the wall pushes a resting particle),
    so the test fires only when the wall has to pull.
    """
    return bool(-(np.asarray(e_n_i, dtype=float) @ solve.f_c) > f_adh)


def check_state(state, surface):
    c = constraint_value(state.r_pc_t, surface)
    if state.mode == Mode.CONSTRAINED and abs(c) >= CONSTRAINT_TOL:
        raise ValidationError(f"constrained particle is off the surface (C = {c:.3g})", "|C| < 1e-8")
    if state.mode == Mode.UNCONSTRAINED and c > CONSTRAINT_TOL:
        raise ValidationError(f"free particle lies outside the surface (C = {c:.3g})", "C <= 0")


def decode_events(ev_kind, ev_time, n_ev):
    n = min(n_ev, ev_kind.shape[0])
    return [Event(_EVENT_CODES[int(k)], float(t)) for k, t in zip(ev_kind[:n], ev_time[:n])]


def emm_step(state, body, dt, cfg, substeps=1, t0=0.0, diag=None):
    """Advance the particle by ``dt`` with the body acceleration held constant.

    Returns the new state and the list of mode-transition events, with
    absolute times offset by ``t0``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    check_state(state, cfg.surface)
    p = pack_params(cfg, body.g_i)
    if p.m_p <= 0.0:
        return SloshState(state.r_pc_t.copy(), state.v_p_i.copy(), state.mode), []
    q, w, wd, vb, ab = _body_tuples(body)
    ev_kind = np.zeros(16 * substeps, dtype=np.int64)
    ev_time = np.zeros(16 * substeps)
    if diag is None:
        diag = np.zeros(3)
    r, v, mode, n_ev, ok = emm_advance(
        to_tuple3(state.r_pc_t), to_tuple3(state.v_p_i), int(state.mode), float(t0),
        q, w, wd, vb, ab, float(dt), int(substeps), p, ev_kind, ev_time, 0, diag,
    )
    if not ok:
        raise IntegrationDivergedError("sloshing particle state became non-finite", t=t0)
    return SloshState(np.array(r), np.array(v), Mode(mode)), decode_events(ev_kind, ev_time, n_ev)


def slosh_wrench(state, body, cfg):
    """Force and torque (body frame, about the body origin) the liquid applies to the spacecraft."""
    p = pack_params(cfg, body.g_i)
    q, w, wd, vb, ab = _body_tuples(body)
    F, T, _ = wrench_kernel(to_tuple3(state.r_pc_t), to_tuple3(state.v_p_i), int(state.mode), q, w, wd, vb, ab, p)
    return SloshWrench(np.array(F), np.array(T))
