"""Small 3D kernel: vectors, cross-product matrices, DCMs and quaternions.

Conventions
-----------
* Quaternions are scalar-first, ``q = (w, x, y, z)``.
* ``q`` is the attitude of the body frame F_b with respect to the inertial
  frame F_i, so ``dcm_from_quat(q)`` is C_{i<-b}: it maps body-frame
  components to inertial components. C_{b<-i} is its transpose.
* Kinematics: ``q_dot = 0.5 * q (x) (0, omega_b)`` with omega_b in F_b.

The ``_t`` helpers work on plain float tuples and are compiled with numba;
the simulation kernels are built from them. The public functions take and
return numpy arrays.
"""

import math
import warnings

import numpy as np
from numba import njit

NORM_TOL = 1e-9

_jit = njit(cache=True)


@_jit
def vadd(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


@_jit
def vsub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


@_jit
def vscale(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


@_jit
def vdot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@_jit
def vcross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


@_jit
def vnorm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@_jit
def mv(m, v):
    """m @ v for a row-major 3x3 tuple."""
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


@_jit
def mtv(m, v):
    """m.T @ v."""
    return (
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    )


@_jit
def mtranspose(m):
    return (
        (m[0][0], m[1][0], m[2][0]),
        (m[0][1], m[1][1], m[2][1]),
        (m[0][2], m[1][2], m[2][2]),
    )


@_jit
def mm(a, b):
    bt = mtranspose(b)
    return (
        (vdot(a[0], bt[0]), vdot(a[0], bt[1]), vdot(a[0], bt[2])),
        (vdot(a[1], bt[0]), vdot(a[1], bt[1]), vdot(a[1], bt[2])),
        (vdot(a[2], bt[0]), vdot(a[2], bt[1]), vdot(a[2], bt[2])),
    )


@_jit
def skew_t(v):
    return (
        (0.0, -v[2], v[1]),
        (v[2], 0.0, -v[0]),
        (-v[1], v[0], 0.0),
    )


@_jit
def quat_mul_t(p, q):
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return (
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    )


@_jit
def quat_normalize_t(q):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


@_jit
def quat_step_t(q, w, dt):
    wn = vnorm(w)
    if wn == 0.0 or dt == 0.0:
        return q
    half = 0.5 * wn * dt
    s = math.sin(half) / wn
    dq = (math.cos(half), w[0] * s, w[1] * s, w[2] * s)
    return quat_normalize_t(quat_mul_t(q, dq))


@_jit
def dcm_t(q):
    w, x, y, z = q
    return (
        (1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
        (2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
        (2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
    )


def as_vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def as_quat(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a quaternion of length 4, got shape {q.shape}")
    return q


def to_tuple3(v):
    return (float(v[0]), float(v[1]), float(v[2]))


def to_mat_tuple(m):
    m = np.asarray(m, dtype=float)
    return tuple(to_tuple3(row) for row in m)


def skew(v):
    """Cross-product matrix: ``skew(v) @ u == np.cross(v, u)``."""
    return np.array(skew_t(to_tuple3(as_vec(v))))


def quat_normalize(q):
    q = as_quat(q)
    return q / np.linalg.norm(q)


def quat_multiply(p, q):
    return np.array(quat_mul_t(tuple(as_quat(p)), tuple(as_quat(q))))


def quat_conjugate(q):
    q = as_quat(q)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def dcm_from_quat(q):
    """C_{i<-b} for attitude quaternion ``q``.

    A quaternion whose norm is off by more than 1e-9 is normalized first and
    a ``RuntimeWarning`` is issued.
    """
    q = as_quat(q)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError("quaternion has zero or non-finite norm")
    if abs(n - 1.0) > NORM_TOL:
        warnings.warn(f"non-unit quaternion (norm {n:.12g}) normalized", RuntimeWarning)
        q = q / n
    return np.array(dcm_t(tuple(float(c) for c in q)))


def quat_step(q, omega_b, dt):
    """Advance ``q`` by the exact rotation of a constant body rate over ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    q = as_quat(q)
    return np.array(quat_step_t(tuple(float(c) for c in q), to_tuple3(as_vec(omega_b)), float(dt)))


def quat_from_axis_angle(axis, angle):
    axis = as_vec(axis)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[math.cos(0.5 * angle)], math.sin(0.5 * angle) * axis])


def is_rotation(m, tol=NORM_TOL):
    m = np.asarray(m, dtype=float)
    return (
        m.shape == (3, 3)
        and np.max(np.abs(m @ m.T - np.eye(3))) < tol
        and abs(np.linalg.det(m) - 1.0) < tol
    )
