import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from spinslosh.geometry import (
    dcm_from_quat, is_rotation, quat_conjugate, quat_from_axis_angle, quat_multiply, quat_normalize,
    quat_step, skew,
)

finite = st.floats(-10, 10, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
quat = st.tuples(finite, finite, finite, finite).filter(lambda q: np.linalg.norm(q) > 1e-3).map(
    lambda q: np.array(q) / np.linalg.norm(q)
)


def test_skew_zero_vector_is_zero_matrix():
    assert np.array_equal(skew([0, 0, 0]), np.zeros((3, 3)))


def test_skew_unit_cross_product():
    assert np.allclose(skew([0, 0, 1]) @ [1, 0, 0], [0, 1, 0])


def test_skew_rows_along_x():
    a = 0.0405
    S = skew([a, 0, 0])
    assert np.array_equal(S[1], [0, 0, -a])
    assert np.array_equal(S[2], [0, a, 0])


@given(vec3, vec3)
def test_skew_matches_cross_and_is_antisymmetric(v, u):
    assert np.allclose(skew(v) @ u, np.cross(v, u), atol=1e-12)
    assert np.allclose(skew(v) @ u + skew(u) @ v, 0.0, atol=1e-12)
    assert np.array_equal(skew(v).T, -skew(v))


def test_identity_quaternion_gives_identity_dcm():
    assert np.array_equal(dcm_from_quat([1, 0, 0, 0]), np.eye(3))


def test_quarter_turn_about_z():
    c = math.cos(math.pi / 4)
    assert np.allclose(dcm_from_quat([c, 0, 0, c]) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(quat)
def test_dcm_orthonormal(q):
    C = dcm_from_quat(q)
    assert np.max(np.abs(C @ C.T - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(C) - 1) < 1e-9
    assert is_rotation(C)


@given(quat)
def test_dcm_matches_scipy(q):
    # scipy uses scalar-last quaternions and the same active convention
    ref = Rotation.from_quat([q[1], q[2], q[3], q[0]]).as_matrix()
    assert np.allclose(dcm_from_quat(q), ref, atol=1e-12)


def test_non_unit_quaternion_warns_and_normalizes():
    with pytest.warns(RuntimeWarning):
        C = dcm_from_quat([2.0, 0, 0, 0])
    assert np.allclose(C, np.eye(3))


def test_near_unit_quaternion_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dcm_from_quat([1 + 1e-12, 0, 0, 0])


def test_zero_quaternion_rejected():
    with pytest.raises(ValueError):
        dcm_from_quat([0, 0, 0, 0])


def test_quat_step_zero_rate_is_identity_map():
    q = quat_normalize([0.3, -0.2, 0.5, 0.1])
    assert np.array_equal(quat_step(q, [0, 0, 0], 0.1), q)


def test_quat_step_closed_form_axis_angle():
    q = quat_step([1, 0, 0, 0], [0, 0, math.pi / 2], 1.0)
    assert np.allclose(q, [math.sqrt(0.5), 0, 0, math.sqrt(0.5)], atol=1e-15)


def test_quat_step_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        quat_step([1, 0, 0, 0], [0, 0, 1], 0.0)


@given(quat, vec3, st.floats(1e-4, 1.0))
def test_quat_step_half_steps_compose(q, w, dt):
    one = quat_step(q, w, dt)
    two = quat_step(quat_step(q, w, dt / 2), w, dt / 2)
    assert np.allclose(one, two, atol=1e-12)


@given(quat, vec3, st.floats(1e-4, 1.0))
def test_quat_step_unit_norm_and_matches_matrix_exponential(q, w, dt):
    q1 = quat_step(q, w, dt)
    assert abs(np.linalg.norm(q1) - 1) < 1e-12
    # body-rate kinematics: C(t+dt) = C(t) expm(skew(w) dt)
    assert np.allclose(dcm_from_quat(q1), dcm_from_quat(q) @ expm(skew(w) * dt), atol=1e-10)


@settings(max_examples=50)
@given(quat, quat)
def test_quaternion_product_composes_rotations(p, q):
    assert np.allclose(dcm_from_quat(quat_multiply(p, q)), dcm_from_quat(p) @ dcm_from_quat(q), atol=1e-12)
    assert np.allclose(dcm_from_quat(quat_conjugate(q)), dcm_from_quat(q).T, atol=1e-12)


def test_axis_angle_constructor():
    q = quat_from_axis_angle([0, 0, 2.0], math.pi)
    assert np.allclose(dcm_from_quat(q) @ [1, 0, 0], [-1, 0, 0], atol=1e-15)
