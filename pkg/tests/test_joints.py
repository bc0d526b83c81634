"""Revolute joints and rigid connections: equilibrium relations, torque
balance, and the linearized motion/wrench transforms."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mblft import lft
from mblft import spatial as sp
from mblft.joints import (
    JointError,
    RevoluteJoint,
    RigidConnection,
    revolute_block,
    revolute_dcm,
    revolute_dcm_lft,
    revolute_equilibrium,
    revolute_motion_transform_nonlinear,
    rigid_connection_equilibrium,
)

AXES = [
    np.array([1.0, 0.0, 0.0]),
    np.array([0.0, 0.0, 1.0]),
    np.array([0.6, 0.8, 0.0]),
]


def _joint(axis, angle=0.4, **kw):
    return RevoluteJoint(
        name="j",
        parent_port=("a", "p"),
        child_port=("b", "ref"),
        axis=axis,
        angle_eq=angle,
        **kw,
    )


def test_axis_must_be_unit():
    with pytest.raises(JointError):
        _joint(np.array([1.0, 1.0, 0.0]))


def test_revolute_dcm_is_rotation_about_axis():
    for axis in AXES:
        j = _joint(axis, angle=0.7)
        np.testing.assert_allclose(
            revolute_dcm(j, 0.7),
            sp.rotation_about_axis(axis, 0.7),
            atol=1e-14,
        )


def test_revolute_dcm_lft_matches_numeric_with_varying_angle():
    t = lft.HalfTanParam.from_angle("th", 0.5, -1.2, 1.2)
    j = _joint(AXES[2], angle=t)
    g = revolute_dcm_lft(j)
    for th in np.linspace(-1.2, 1.2, 9):
        np.testing.assert_allclose(
            g.evaluate({t.param.name: math.tan(th / 2)}),
            revolute_dcm(j, th),
            atol=1e-12,
        )


# ---------------------------------------------------------------------------
# equilibrium torque balance
# ---------------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_torque_balances_axial_load_component(seed):
    """C_m + r6^T W_A/J = 0 for any load, any axis."""
    rng = np.random.default_rng(seed)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    j = _joint(axis, angle=float(rng.uniform(-1.0, 1.0)))
    w_aj = rng.standard_normal((6, 1))
    _, c_m, _ = revolute_equilibrium(j, np.zeros(3), w_aj)
    residual = float(c_m.evaluate({})[0, 0]) + float(
        j.r6 @ w_aj.ravel()
    )
    assert abs(residual) <= 1e-12


def test_transmitted_wrench_is_frame_change_only():
    """W_J/B = P2(theta) W_A/J: same physical wrench, parent components."""
    rng = np.random.default_rng(9)
    j = _joint(AXES[0], angle=0.9)
    w_aj = rng.standard_normal((6, 1))
    _, _, w_jb = revolute_equilibrium(j, np.zeros(3), w_aj)
    p2 = sp.p2(revolute_dcm(j, 0.9))
    np.testing.assert_allclose(
        w_jb.evaluate({}).ravel(), p2 @ w_aj.ravel(), atol=1e-12
    )


def test_child_euler_composition():
    j = _joint(AXES[0], angle=math.radians(40))
    theta_b = np.array([0.2, -0.1, 0.3])
    theta_a, _, _ = revolute_equilibrium(j, theta_b, np.zeros((6, 1)))
    p_ai = sp.dcm_from_euler(sp.EulerState(theta_b)).matrix @ revolute_dcm(
        j, math.radians(40)
    )
    np.testing.assert_allclose(
        sp.dcm_from_euler(sp.EulerState(theta_a)).matrix, p_ai, atol=1e-12
    )


def test_rigid_connection_equilibrium_composes_dcms():
    fixed = sp.rotation_about_axis(AXES[2], 0.8)
    conn = RigidConnection(
        name="c", parent_port=("a", "p"), child_port=("b", "ref"), fixed_dcm=fixed
    )
    theta_b = np.array([0.3, 0.2, -0.4])
    theta_a = rigid_connection_equilibrium(conn, theta_b)
    np.testing.assert_allclose(
        sp.dcm_from_euler(sp.EulerState(theta_a)).matrix,
        sp.dcm_from_euler(sp.EulerState(theta_b)).matrix @ fixed,
        atol=1e-12,
    )


# ---------------------------------------------------------------------------
# linearized joint block vs the nonlinear motion transform
# ---------------------------------------------------------------------------


def test_motion_transform_velocity_rows_match_fd_of_pose():
    """omega_A = P^T omega_B + thetadot r, checked against the block."""
    j = _joint(AXES[0], angle=0.6)
    m_b = np.zeros(18)
    m_b[9:12] = np.array([0.1, -0.3, 0.2])  # parent angular velocity
    out = revolute_motion_transform_nonlinear(j, m_b, 0.6, 0.5, 0.0)
    p = revolute_dcm(j, 0.6)
    np.testing.assert_allclose(
        out[9:12], p.T @ m_b[9:12] + 0.5 * j.axis, atol=1e-12
    )


def test_block_angle_rows_passthrough():
    """The joint block exposes delta theta / delta thetadot as states."""
    j = _joint(AXES[0], angle=0.3, friction=2.0, shaft_inertia=1e-6)
    blk = revolute_block(j, np.zeros(3), np.zeros((6, 1)), np.zeros((3, 1)))
    a = blk.a.evaluate({})
    assert a.shape == (2, 2)
    # d(theta)/dt = thetadot; damping row: -K_J / J^J
    np.testing.assert_allclose(a[0], [0.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(a[1, 1], -2.0 / 1e-6, rtol=1e-12)


def test_block_wrench_stiffness_matches_fd():
    """d(P2(theta) W)/dtheta from the block equals a finite difference."""
    rng = np.random.default_rng(11)
    w_aj = rng.standard_normal((6, 1))
    j = _joint(AXES[2], angle=0.5)
    h = 1e-7
    fd = (
        sp.p2(revolute_dcm(j, 0.5 + h)) - sp.p2(revolute_dcm(j, 0.5 - h))
    ) @ w_aj.ravel() / (2 * h)
    blk = revolute_block(j, np.zeros(3), w_aj, np.zeros((3, 1)))
    # output rows 18:24 are delta W_J/B; the column multiplying delta theta
    # (first state) carries the geometric stiffness
    c = blk.c.evaluate({})
    np.testing.assert_allclose(c[18:24, 0], fd, atol=1e-6)
