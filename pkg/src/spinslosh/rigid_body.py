"""Rotational dynamics of the rigid spacecraft (translation is not propagated)."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import IntegrationDivergedError, ValidationError
from .geometry import as_quat, as_vec


@dataclass(frozen=True)
class InertiaModel:
    """Inertia tensor J about the body origin, body frame (kg m^2)."""

    J: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        if J.shape != (3, 3) or not np.all(np.isfinite(J)):
            raise ValidationError("inertia tensor must be a finite 3x3 matrix", "J is 3x3")
        if np.max(np.abs(J - J.T)) > 1e-12 * max(1.0, np.max(np.abs(J))):
            raise ValidationError("inertia tensor must be symmetric", "J symmetric")
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValidationError("inertia tensor must be positive definite", "J positive definite")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "_J_inv", np.linalg.inv(J))

    @property
    def J_z(self):
        return float(self.J[2, 2])

    @property
    def J_inv(self):
        return self._J_inv


@dataclass
class BodyState:
    """Attitude ``q`` (C_{i<-b} = dcm_from_quat(q)) and body rate ``omega_b``."""

    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    omega_b: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.q = as_quat(self.q)
        self.omega_b = as_vec(self.omega_b)


@dataclass(frozen=True)
class StructureSpec:
    """Hub cylinder (axis along body z) with two rods along body x ending in tip masses."""

    m_hub: float = 0.0
    r_hub: float = 0.0
    h_hub: float = 0.0
    l_beam: float = 0.0
    m_tip: float = 0.0
    point_masses: tuple = ()

    def __post_init__(self):
        for name in ("m_hub", "r_hub", "h_hub", "l_beam", "m_tip"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative", f"{name} >= 0")
        for m, _ in self.point_masses:
            if m < 0:
                raise ValidationError("point masses must be non-negative", "mass >= 0")


def point_mass_inertia(m, r):
    r = np.asarray(r, dtype=float)
    return m * ((r @ r) * np.eye(3) - np.outer(r, r))


def compose_inertia(spec):
    """Inertia about the hub center: solid cylinder plus point masses (parallel axis)."""
    m, r, h = spec.m_hub, spec.r_hub, spec.h_hub
    J = np.diag([m * (3 * r**2 + h**2) / 12.0, m * (3 * r**2 + h**2) / 12.0, 0.5 * m * r**2])
    if spec.m_tip > 0:
        arm = spec.r_hub + spec.l_beam
        J = J + point_mass_inertia(spec.m_tip, [arm, 0, 0]) + point_mass_inertia(spec.m_tip, [-arm, 0, 0])
    for mass, pos in spec.point_masses:
        J = J + point_mass_inertia(mass, pos)
    return InertiaModel(J)


def angular_accel(J, omega_b, tau_b):
    """Euler's equation: J^-1 (tau - omega x J omega)."""
    w = np.asarray(omega_b, dtype=float)
    return J.J_inv @ (np.asarray(tau_b, dtype=float) - np.cross(w, J.J @ w))


def _qdot(q, w):
    # 0.5 * q (x) (0, w)
    qw, qx, qy, qz = q
    return 0.5 * np.array([
        -qx * w[0] - qy * w[1] - qz * w[2],
        qw * w[0] + qy * w[2] - qz * w[1],
        qw * w[1] - qx * w[2] + qz * w[0],
        qw * w[2] + qx * w[1] - qy * w[0],
    ])


def propagate(state, tau_b, J, dt):
    """One RK4 step of attitude and rate.

    ``tau_b`` is either a constant body torque or a callable
    ``tau_b(s, omega_b)`` evaluated at each stage, ``s`` being the time
    since the start of the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    torque = tau_b if callable(tau_b) else (lambda s, w, _t=np.asarray(tau_b, dtype=float): _t)

    def f(s, q, w):
        return _qdot(q, w), angular_accel(J, w, torque(s, w))

    q0, w0 = state.q, state.omega_b
    h = 0.5 * dt
    k1q, k1w = f(0.0, q0, w0)
    k2q, k2w = f(h, q0 + h * k1q, w0 + h * k1w)
    k3q, k3w = f(h, q0 + h * k2q, w0 + h * k2w)
    k4q, k4w = f(dt, q0 + dt * k3q, w0 + dt * k3w)
    q = q0 + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    w = w0 + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(w))):
        raise IntegrationDivergedError("rigid-body state became non-finite")
    return BodyState(q / np.linalg.norm(q), w)


def angular_momentum_inertial(state, J):
    from .geometry import dcm_from_quat

    return dcm_from_quat(state.q) @ (J.J @ state.omega_b)


def kinetic_energy(state, J):
    return 0.5 * float(state.omega_b @ J.J @ state.omega_b)
