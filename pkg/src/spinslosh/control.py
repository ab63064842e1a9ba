"""Reference spin-rate profiles and the proportional rate controller."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .geometry import as_vec


class ManeuverKind(str, enum.Enum):
    FLAT_SPIN = "flat_spin"
    SPIN_UP = "spin_up"


class ReferenceMode(str, enum.Enum):
    # controller error against the constant nominal rate
    STEP = "step"
    # controller error against the ramped guidance profile
    RAMP = "ramp"


@dataclass(frozen=True)
class ManeuverProfile:
    """Piecewise-linear spin-rate profile about ``axis``.

    Flat spin: ramp up for ``t_acc``, hold for ``t_hold``, ramp down for
    ``t_dec``, then rest until ``t_end``. Spin-up: ramp up for ``t_acc``,
    then hold until ``t_end``.
    """

    kind: ManeuverKind
    omega_max: float
    omega_dot: float
    t_acc: float
    t_end: float
    t_hold: float = 0.0
    t_dec: float = 0.0
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "kind", ManeuverKind(self.kind))
        axis = as_vec(self.axis)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValidationError("maneuver axis must be a unit vector", "|axis| = 1")
        object.__setattr__(self, "axis", axis)
        if min(self.t_acc, self.t_hold, self.t_dec, self.t_end) < 0:
            raise ValidationError("maneuver times must be non-negative", "times >= 0")
        if abs(self.omega_max - self.omega_dot * self.t_acc) > 1e-12 * max(1.0, abs(self.omega_max)):
            raise ValidationError(
                f"omega_max ({self.omega_max}) must equal omega_dot * t_acc ({self.omega_dot * self.t_acc})",
                "omega_max = omega_dot * t_acc",
            )
        if self.kind == ManeuverKind.FLAT_SPIN:
            if self.t_acc + self.t_hold + self.t_dec > self.t_end + 1e-12:
                raise ValidationError("flat-spin phases exceed t_end", "t_acc + t_hold + t_dec <= t_end")
        elif self.t_acc > self.t_end + 1e-12:
            raise ValidationError("acceleration phase exceeds t_end", "t_acc <= t_end")

    @classmethod
    def flat_spin(cls, omega_max, t_acc, t_hold, t_dec, t_end, **kw):
        return cls(ManeuverKind.FLAT_SPIN, omega_max, omega_max / t_acc if t_acc else 0.0, t_acc, t_end, t_hold, t_dec, **kw)

    @classmethod
    def spin_up(cls, omega_max, t_acc, t_end, **kw):
        return cls(ManeuverKind.SPIN_UP, omega_max, omega_max / t_acc if t_acc else 0.0, t_acc, t_end, **kw)

    def breakpoints(self):
        """(times, rates) of the piecewise-linear profile."""
        if self.kind == ManeuverKind.FLAT_SPIN:
            t1 = self.t_acc
            t2 = t1 + self.t_hold
            t3 = t2 + self.t_dec
            t = [0.0, t1, t2, t3, max(t3, self.t_end)]
            w = [0.0, self.omega_max, self.omega_max, 0.0, 0.0]
        else:
            t = [0.0, self.t_acc, max(self.t_acc, self.t_end)]
            w = [0.0, self.omega_max, self.omega_max]
        return np.array(t, dtype=float), np.array(w, dtype=float)


def reference_profile(t, profile):
    """Reference rate and its slope at ``t`` (right-continuous slope at kinks).

    Times past ``t_end`` return the final value with zero slope.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    bt, bw = profile.breakpoints()
    if t >= bt[-1]:
        return float(bw[-1]), 0.0
    k = int(np.searchsorted(bt, t, side="right")) - 1
    span = bt[k + 1] - bt[k]
    slope = (bw[k + 1] - bw[k]) / span if span > 0 else 0.0
    return float(bw[k] + slope * (t - bt[k])), float(slope)


def gain_from_spec(epsilon, omega_n, J_z):
    return 2.0 * epsilon * omega_n * J_z


def rate_controller(omega_meas, omega_ref, K):
    """Torque about the spin axis, u = K (omega_ref - omega_meas)."""
    return K * (omega_ref - omega_meas)


@dataclass(frozen=True)
class ControlSpec:
    epsilon: float
    omega_n: float
    J_z: float
    omega_nom: float
    reference: ReferenceMode = ReferenceMode.STEP
    K: float = None

    def __post_init__(self):
        object.__setattr__(self, "reference", ReferenceMode(self.reference))
        for name in ("epsilon", "omega_n", "J_z"):
            if getattr(self, name) < 0:
                raise ValidationError(f"control {name} must be non-negative", f"{name} >= 0")
        K = gain_from_spec(self.epsilon, self.omega_n, self.J_z)
        if self.K is None:
            object.__setattr__(self, "K", K)
        elif abs(self.K - K) > 1e-12 * max(1.0, abs(K)):
            raise ValidationError(
                f"gain K={self.K} disagrees with 2*epsilon*omega_n*J_z={K}", "K = 2 epsilon omega_n J_z"
            )

    @property
    def time_constant(self):
        return self.J_z / self.K

    def reference_rate(self, t, profile):
        if self.reference == ReferenceMode.STEP:
            return self.omega_nom
        return reference_profile(t, profile)[0]
