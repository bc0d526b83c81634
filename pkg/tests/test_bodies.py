"""Rigid-body direct dynamics, static wrenches, and linearized blocks."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mblft import lft
from mblft import spatial as sp
from mblft.bodies import (
    BodyError,
    DynamicsRole,
    RigidBody,
    acceleration_terms,
    direct_dynamics_at_port,
    direct_dynamics_cog,
    equilibrium_wrench,
    linearized_forward_block,
    linearized_inverse_block,
    newton_euler_at_port,
    nonlinear_terms,
    stiffness_matrix,
)

FIN = st.floats(-2.0, 2.0)


def _body(mass=2.0, cog=(0.1, -0.2, 0.5), role=DynamicsRole.INVERSE):
    j = np.diag([0.4, 0.3, 0.25])
    return RigidBody(
        name="b",
        mass=mass,
        inertia_cog=j,
        cog_offset=cog,
        ports=(("p", (1.0, 0.0, 0.0)),),
        dynamics_role=role,
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_negative_mass_rejected():
    with pytest.raises(BodyError):
        _body(mass=-1.0)


def test_zero_mass_ok_for_inverse_role_only():
    _body(mass=0.0, role=DynamicsRole.INVERSE)  # no error
    with pytest.raises(BodyError):
        RigidBody(
            name="b",
            mass=0.0,
            inertia_cog=np.zeros((3, 3)),
            cog_offset=(0, 0, 0),
            dynamics_role=DynamicsRole.FORWARD,
        )


def test_uncertain_mass_must_stay_positive_over_box():
    m = lft.Param("m", 1.0, -0.5, 2.0, "uncertain")
    with pytest.raises(BodyError):
        RigidBody(
            name="b",
            mass=m,
            inertia_cog=np.zeros((3, 3)),
            cog_offset=(0, 0, 0),
            dynamics_role=DynamicsRole.FORWARD,
        )


# ---------------------------------------------------------------------------
# direct dynamics
# ---------------------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(FIN, FIN, FIN)
def test_d_at_port_symmetric_and_congruent(cx, cy, cz):
    b = _body(cog=(cx, cy, cz))
    d_cog = direct_dynamics_cog(b).evaluate({})
    d_port = direct_dynamics_at_port(b, "p").matrix.evaluate({})
    np.testing.assert_allclose(d_port, d_port.T, atol=1e-12)
    offset = b.port_position_value("p", {}) - b.cog_offset_value({})
    tau = sp.tau_matrix(offset)
    np.testing.assert_allclose(d_port, tau.T @ d_cog @ tau, atol=1e-12)
    # positive semidefinite
    assert np.min(np.linalg.eigvalsh(d_port)) > -1e-12


def test_newton_euler_matches_first_principles():
    """Wrench at a port from explicit CoG dynamics and moment transport."""
    rng = np.random.default_rng(5)
    b = _body()
    xpp = rng.standard_normal(6)
    omega = rng.standard_normal(3)
    a6 = np.zeros(6)
    w = newton_euler_at_port(b, "p", xpp, omega, a6, {})

    m = b.mass_value({})
    j = b.inertia_value({})
    # acceleration of the CoG: a_cog = a_port + alpha x r + w x (w x r),
    # with r the vector port -> CoG expressed in body axes
    r = b.cog_offset_value({}) - b.port_position_value("p", {})
    a_port, alpha = xpp[:3], xpp[3:]
    a_cog = a_port + np.cross(alpha, r) + np.cross(omega, np.cross(omega, r))
    f = m * a_cog
    t_cog = j @ alpha + np.cross(omega, j @ omega)
    t_port = t_cog + np.cross(r, f)
    np.testing.assert_allclose(w[:3], f, atol=1e-10)
    np.testing.assert_allclose(w[3:], t_port, atol=1e-10)


def test_nonlinear_terms_equal_full_minus_linear_part():
    rng = np.random.default_rng(6)
    b = _body()
    omega = rng.standard_normal(3)
    d = direct_dynamics_at_port(b, "p").matrix.evaluate({})
    full = newton_euler_at_port(b, "p", np.zeros(6), omega, np.zeros(6), {})
    nl = nonlinear_terms(b, "p", omega, {})
    np.testing.assert_allclose(full, d @ np.zeros(6) + nl, atol=1e-10)


def test_equilibrium_wrench_is_d_times_a6():
    b = _body()
    a6 = np.array([0.0, 0.0, 9.81, 0.0, 0.0, 0.0])
    w = equilibrium_wrench(b, "p", a6).evaluate({})
    d = direct_dynamics_at_port(b, "p").matrix.evaluate({})
    np.testing.assert_allclose(w.ravel(), d @ a6, atol=1e-12)


# ---------------------------------------------------------------------------
# gravity stiffness: d(P^T a)/dtheta against finite differences
# ---------------------------------------------------------------------------


def test_acceleration_terms_derivative_against_fd():
    a_ref = np.array([0.0, 0.0, 9.81])
    theta = np.array([0.35, -0.2, 0.6])
    a6, da6 = acceleration_terms(a_ref, theta)
    a6 = a6.evaluate({}).ravel()
    da6 = da6.evaluate({})
    p = sp.dcm_from_euler(sp.EulerState(theta)).matrix
    np.testing.assert_allclose(a6[:3], p.T @ a_ref, atol=1e-12)
    np.testing.assert_allclose(a6[3:], 0.0, atol=1e-14)
    h = 1e-7
    for j in range(3):
        dth = np.zeros(3)
        dth[j] = h
        ap = sp.dcm_from_euler(sp.EulerState(theta + dth)).matrix.T @ a_ref
        am = sp.dcm_from_euler(sp.EulerState(theta - dth)).matrix.T @ a_ref
        np.testing.assert_allclose(da6[:3, j], (ap - am) / (2 * h), atol=1e-5)


def test_stiffness_matrix_layout():
    b = _body()
    a_ref = np.array([0.0, 0.0, 9.81])
    theta = np.array([0.1, 0.2, -0.3])
    _, da6 = acceleration_terms(a_ref, theta)
    k = stiffness_matrix(b, "p", da6).matrix.evaluate({})
    assert k.shape == (6, 6)
    np.testing.assert_allclose(k[:, :3], 0.0, atol=1e-14)


# ---------------------------------------------------------------------------
# linearized blocks
# ---------------------------------------------------------------------------


def test_forward_block_b_matrix_is_d_inverse():
    b = _body(role=DynamicsRole.FORWARD)
    blk = linearized_forward_block(b, "p", np.array([0, 0, 9.81]), np.zeros(3))
    a, bb, _, _ = (
        blk.a.evaluate({}),
        blk.b.evaluate({}),
        blk.c.evaluate({}),
        blk.d.evaluate({}),
    )
    d = direct_dynamics_at_port(b, "p").matrix.evaluate({})
    np.testing.assert_allclose(bb[:6, :], np.linalg.inv(d), atol=1e-9)
    np.testing.assert_allclose(bb[6:, :], 0.0, atol=1e-14)
    # A = [[0, -D^-1 K], [E, 0]] ; the velocity-velocity block vanishes
    np.testing.assert_allclose(a[:6, :6], 0.0, atol=1e-12)


def test_inverse_block_is_stateless_gain():
    b = _body()
    blk = linearized_inverse_block(b, "p", np.array([0, 0, 9.81]), np.zeros(3))
    assert blk.a.shape[0] == 0 or blk.a.shape == (0, 0)
    g = blk.d.evaluate({})
    assert g.shape == (6, 18)
    d = direct_dynamics_at_port(b, "p").matrix.evaluate({})
    np.testing.assert_allclose(g[:, :6], d, atol=1e-12)
    np.testing.assert_allclose(g[:, 6:12], 0.0, atol=1e-14)
