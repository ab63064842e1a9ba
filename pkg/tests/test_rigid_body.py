import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinslosh.exceptions import ValidationError
from spinslosh.rigid_body import (
    BodyState, InertiaModel, StructureSpec, angular_accel, angular_momentum_inertial, compose_inertia,
    kinetic_energy, propagate,
)

J_SAT = InertiaModel(np.diag([0.5002, 1.2404, 1.6727]))


def test_cylinder_inertia():
    J = compose_inertia(StructureSpec(m_hub=10, r_hub=0.4, h_hub=0.2))
    assert J.J_z == pytest.approx(0.8, rel=1e-15)
    assert J.J[0, 0] == pytest.approx(10 * (3 * 0.16 + 0.04) / 12, rel=1e-15)


def test_point_mass_contribution():
    base = StructureSpec(m_hub=10, r_hub=0.4, h_hub=0.2)
    extra = StructureSpec(m_hub=10, r_hub=0.4, h_hub=0.2, point_masses=((1.0, (0.6, 0, 0)),))
    assert compose_inertia(extra).J_z - compose_inertia(base).J_z == pytest.approx(0.36, rel=1e-12)


def test_tip_masses_on_rods():
    J = compose_inertia(StructureSpec(m_hub=10, r_hub=0.4, h_hub=0.2, l_beam=0.2, m_tip=1.0))
    assert J.J_z == pytest.approx(0.8 + 2 * 0.6**2, rel=1e-12)
    assert J.J[1, 1] == pytest.approx(10 * (3 * 0.16 + 0.04) / 12 + 2 * 0.36, rel=1e-12)


def test_empty_structure_rejected():
    with pytest.raises(ValidationError):
        compose_inertia(StructureSpec())


def test_inertia_validation():
    with pytest.raises(ValidationError):
        InertiaModel([[1, 0.1, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(ValidationError):
        InertiaModel(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValidationError):
        StructureSpec(m_hub=-1)


def test_principal_axis_spin_has_no_gyroscopic_acceleration():
    assert np.array_equal(angular_accel(J_SAT, [0, 0, 1.5], [0, 0, 0]), np.zeros(3))


def test_gyroscopic_coupling_by_hand():
    wd = angular_accel(J_SAT, [0.1, 0, 1.5], [0, 0, 0])
    # -J^-1 (w x J w): only the y row survives
    expected_y = -(1.5 * 0.5002 * 0.1 - 0.1 * 1.6727 * 1.5) / 1.2404
    assert wd == pytest.approx([0, expected_y, 0], abs=1e-15)
    assert wd[1] == pytest.approx(0.14179, abs=1e-5)


def test_axial_torque_from_rest():
    assert angular_accel(J_SAT, [0, 0, 0], [0, 0, 0.1405]) == pytest.approx([0, 0, 0.1405 / 1.6727], rel=1e-15)
    assert 0.1405 / 1.6727 == pytest.approx(0.08400, abs=5e-6)


def test_propagate_rest_is_unchanged():
    s = BodyState()
    s1 = propagate(s, np.zeros(3), J_SAT, 0.01)
    assert np.array_equal(s1.q, s.q) and np.array_equal(s1.omega_b, s.omega_b)


def test_propagate_rejects_bad_dt():
    with pytest.raises(ValueError):
        propagate(BodyState(), np.zeros(3), J_SAT, 0.0)


def test_constant_axial_torque_ramps_linearly():
    s = BodyState()
    tau = np.array([0, 0, 0.05])
    for _ in range(1000):
        s = propagate(s, tau, J_SAT, 0.01)
    assert s.omega_b[2] == pytest.approx(0.05 / 1.6727 * 10.0, abs=1e-9)
    # spin angle 0.5 alpha t^2 about z exactly
    ang = 0.5 * 0.05 / 1.6727 * 100.0
    assert s.q == pytest.approx([np.cos(ang / 2), 0, 0, np.sin(ang / 2)], abs=1e-9)


def test_torque_free_z_spin_conserves_everything():
    s = BodyState(omega_b=[0, 0, 1.5])
    H0, E0 = angular_momentum_inertial(s, J_SAT), kinetic_energy(s, J_SAT)
    for _ in range(10000):
        s = propagate(s, np.zeros(3), J_SAT, 0.01)
    assert np.linalg.norm(s.omega_b) == pytest.approx(1.5, rel=1e-9)
    assert np.linalg.norm(angular_momentum_inertial(s, J_SAT) - H0) < 1e-9 * np.linalg.norm(H0)
    assert abs(kinetic_energy(s, J_SAT) - E0) < 1e-9 * E0


def test_callable_torque_sees_stage_times_and_rates():
    seen = []

    def tau(s, w):
        seen.append((s, w[2]))
        return np.zeros(3)

    propagate(BodyState(omega_b=[0, 0, 1.0]), tau, J_SAT, 0.1)
    assert [round(s, 12) for s, _ in seen] == [0.0, 0.05, 0.05, 0.1]


@settings(max_examples=25, deadline=None)
@given(st.tuples(*[st.floats(-1.5, 1.5)] * 3))
def test_short_tumbles_conserve_momentum(w):
    # rates up to the 1.5 rad/s mission range; RK4 error grows as (|w| dt)^4
    w = np.array(w)
    if np.linalg.norm(w) > 1.5:
        w *= 1.5 / np.linalg.norm(w)
    s = BodyState(omega_b=w)
    H0 = angular_momentum_inertial(s, J_SAT)
    E0 = kinetic_energy(s, J_SAT)
    for _ in range(500):
        s = propagate(s, np.zeros(3), J_SAT, 0.01)
    scale = max(np.linalg.norm(H0), 1e-12)
    assert np.linalg.norm(angular_momentum_inertial(s, J_SAT) - H0) <= 1e-9 * scale
    assert abs(kinetic_energy(s, J_SAT) - E0) <= 1e-8 * max(E0, 1e-12)
    assert abs(np.linalg.norm(s.q) - 1) < 1e-12
