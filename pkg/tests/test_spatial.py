"""Frames, Euler kinematics, 6-D transports, and their LFT counterparts."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from mblft import lft
from mblft import spatial as sp

SAFE_ANGLE = st.floats(-1.2, 1.2)  # away from the +/- pi/2 gimbal zone


# ---------------------------------------------------------------------------
# numeric kinematics
# ---------------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(SAFE_ANGLE, SAFE_ANGLE, SAFE_ANGLE)
def test_dcm_matches_scipy_intrinsic_xyz(t1, t2, t3):
    d = sp.dcm_from_euler(sp.EulerState(np.array([t1, t2, t3])))
    expected = Rotation.from_euler("XYZ", [t1, t2, t3]).as_matrix()
    np.testing.assert_allclose(d.matrix, expected, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(SAFE_ANGLE, SAFE_ANGLE, SAFE_ANGLE)
def test_euler_round_trip(t1, t2, t3):
    angles = np.array([t1, t2, t3])
    d = sp.dcm_from_euler(sp.EulerState(angles))
    back = sp.euler_from_dcm(d)
    np.testing.assert_allclose(back.angles, angles, atol=1e-10)


def test_gimbal_lock_raises():
    d = sp.dcm_from_euler(sp.EulerState(np.array([0.3, math.pi / 2, 0.1])))
    with pytest.raises(sp.GimbalLockError):
        sp.euler_from_dcm(d)


@settings(max_examples=30, deadline=None)
@given(SAFE_ANGLE, SAFE_ANGLE, SAFE_ANGLE)
def test_euler_rate_map_against_fd(t1, t2, t3):
    """[omega]_body = Gamma @ thetadot, via finite differences of the DCM."""
    angles = np.array([t1, t2, t3])
    gamma = sp.euler_rate_map(sp.EulerState(angles))
    h = 1e-7
    for j in range(3):
        dth = np.zeros(3)
        dth[j] = h
        p_plus = sp.dcm_from_euler(sp.EulerState(angles + dth)).matrix
        p_minus = sp.dcm_from_euler(sp.EulerState(angles - dth)).matrix
        p = sp.dcm_from_euler(sp.EulerState(angles)).matrix
        # Pdot = P [omega]x  =>  [omega]x = P^T Pdot
        omega_x = p.T @ (p_plus - p_minus) / (2 * h)
        omega = np.array([omega_x[2, 1], omega_x[0, 2], omega_x[1, 0]])
        np.testing.assert_allclose(omega, gamma[:, j], atol=1e-6)


def test_skew_is_cross_product():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        np.testing.assert_allclose(sp.skew(a) @ b, np.cross(a, b), atol=1e-14)


def test_rodrigues_matches_scipy():
    axis = np.array([0.3, -0.5, 0.81])
    axis /= np.linalg.norm(axis)
    for theta in np.linspace(-3.0, 3.0, 7):
        np.testing.assert_allclose(
            sp.rotation_about_axis(axis, theta),
            Rotation.from_rotvec(theta * axis).as_matrix(),
            atol=1e-12,
        )


def test_tau_transport_duality():
    """Wrench transport is the transpose-dual of motion transport."""
    rng = np.random.default_rng(2)
    offset = rng.standard_normal(3)
    tau = sp.tau_matrix(offset)
    # structure: tau = [[I, skew(offset)], [0, I]]
    np.testing.assert_allclose(tau[:3, :3], np.eye(3), atol=1e-14)
    np.testing.assert_allclose(tau[:3, 3:], sp.skew(offset), atol=1e-14)
    np.testing.assert_allclose(tau[3:, 3:], np.eye(3), atol=1e-14)
    np.testing.assert_allclose(tau[3:, :3], np.zeros((3, 3)), atol=1e-14)
    # power invariance: w . (tau x') == (tau^T w) . x' for all pairs
    w = rng.standard_normal(6)
    xp = rng.standard_normal(6)
    np.testing.assert_allclose(w @ (tau @ xp), (tau.T @ w) @ xp, atol=1e-12)


def test_p2_blockdiag_of_dcm():
    d = sp.dcm_from_euler(sp.EulerState(np.array([0.2, -0.4, 0.9])))
    m = sp.p2(d)
    np.testing.assert_allclose(m[:3, :3], d.matrix, atol=1e-14)
    np.testing.assert_allclose(m[3:, 3:], d.matrix, atol=1e-14)
    np.testing.assert_allclose(m[:3, 3:], 0 * m[:3, 3:], atol=1e-14)


# ---------------------------------------------------------------------------
# LFT counterparts agree with the numeric versions
# ---------------------------------------------------------------------------


def _half(name, nominal, lo, hi):
    return lft.HalfTanParam.from_angle(name, nominal, lo, hi)


def test_dcm_lft_matches_numeric():
    t2 = _half("b", 0.3, -1.0, 1.0)
    for th1 in (0.0, 0.7):
        for th2 in np.linspace(-1.0, 1.0, 7):
            g = sp.dcm_lft([th1, t2, -0.2])
            num = sp.dcm_from_euler(
                sp.EulerState(np.array([th1, th2, -0.2]))
            ).matrix
            np.testing.assert_allclose(
                g.evaluate({t2.param.name: math.tan(th2 / 2)}), num, atol=1e-12
            )


def test_gamma_lft_matches_numeric():
    t1 = _half("a", 0.2, -1.0, 1.0)
    t3 = _half("c", -0.4, -1.0, 1.0)
    g = sp.gamma_lft([t1, 0.25, t3])
    for th1 in np.linspace(-0.9, 0.9, 5):
        for th3 in np.linspace(-0.9, 0.9, 5):
            num = sp.euler_rate_map(sp.EulerState(np.array([th1, 0.25, th3])))
            np.testing.assert_allclose(
                g.evaluate(
                    {
                        t1.param.name: math.tan(th1 / 2),
                        t3.param.name: math.tan(th3 / 2),
                    }
                ),
                num,
                atol=1e-12,
            )


def test_rotation_about_axis_lft_matches_rodrigues():
    axis = np.array([2.0, -1.0, 0.5])
    axis /= np.linalg.norm(axis)
    t = _half("th", 0.5, -1.2, 1.2)
    g = sp.rotation_about_axis_lft(axis, t)
    assert g.occurrences(t.param.name) == 2
    for th in np.linspace(-1.2, 1.2, 9):
        np.testing.assert_allclose(
            g.evaluate({t.param.name: math.tan(th / 2)}),
            sp.rotation_about_axis(axis, th),
            atol=1e-12,
        )


def test_skew_and_tau_lft_match_numeric():
    p = lft.Param("L", 2.0, 1.0, 3.0, "design")
    v = np.array([0.0, lft.as_expr(p), 1.0], dtype=object)
    g = sp.skew_lft(v)
    tau = sp.tau_lft(v)
    for val in (1.0, 2.2, 3.0):
        num = sp.skew(np.array([0.0, val, 1.0]))
        np.testing.assert_allclose(g.evaluate({"L": val}), num, atol=1e-12)
        np.testing.assert_allclose(
            tau.evaluate({"L": val}),
            sp.tau_matrix(np.array([0.0, val, 1.0])),
            atol=1e-12,
        )
