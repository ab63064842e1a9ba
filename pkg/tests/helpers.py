"""Shared builders for the test suite."""

import numpy as np

from spinslosh.geometry import dcm_from_quat
from spinslosh.slosh import (
    BodyMotionInput, EMMConfig, FluidProperties, Mode, SloshState, TankGeometry, constrained_accel,
    surface_normal,
)

FLUID = FluidProperties(rho=1400.0, mu=9.93e-4, sigma=0.0135)
A = 0.81 * 0.05


def tank(r_cb=(0.0, 0.2667, 0.0)):
    return TankGeometry(R_t=0.05, r_cb=np.array(r_cb, dtype=float), fill_ratio=0.5)


def config(r_cb=(0.0, 0.2667, 0.0), m0_frac=0.78, a_ratio=0.81, C_f=0.015, f_adh=1e-8):
    return EMMConfig.spherical(tank(r_cb), FLUID, m0_frac, a_ratio, C_f, f_adh=f_adh)


def co_moving(r_pc_t, body, cfg, mode=Mode.CONSTRAINED):
    """Particle state at ``r_pc_t`` moving rigidly with the tank."""
    r_b = cfg.tank.r_cb + cfg.tank.C_tb.T @ np.asarray(r_pc_t, dtype=float)
    v = dcm_from_quat(body.q) @ np.cross(body.omega_b, r_b) + body.v_b_i
    return SloshState(np.asarray(r_pc_t, dtype=float), v, mode)


def tensile_load(state, body, cfg):
    """Outward-normal component of the wall force, i.e. -e_n . f_c for the inward normal."""
    solve = constrained_accel(state, body, cfg)
    n_out_i = dcm_from_quat(body.q) @ cfg.tank.C_tb.T @ surface_normal(state.r_pc_t, cfg.surface)
    return float(n_out_i @ solve.f_c), solve, -n_out_i


def static_body(g=(0.0, 0.0, 0.0)):
    return BodyMotionInput(g_i=np.array(g, dtype=float))
