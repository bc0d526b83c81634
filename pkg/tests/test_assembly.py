"""Whole-model assembly: equilibrium, linearization, sampling, reduction."""
import math
import pathlib

import numpy as np
import pytest

from mblft import lft
from mblft.assembly import (
    AssemblyError,
    ExternalForce,
    MultibodyModel,
    RootSpec,
    TrimError,
    assemble,
    freeze_model,
    modes,
    sample_model,
    sample_point,
)
from mblft.bodies import DynamicsRole, RigidBody
from mblft.joints import RevoluteJoint
from mblft.modelfile import load_model

MODELS = pathlib.Path(__file__).resolve().parents[1] / "models"
G = 9.81


def _pendulum(mass=1.0, length=1.0, friction=0.0, shaft=1e-10, accel=(0, 0, G)):
    bob = RigidBody(
        name="bob",
        mass=mass,
        inertia_cog=np.zeros((3, 3)),
        cog_offset=(0.0, 0.0, -length),
        dynamics_role=DynamicsRole.INVERSE,
    )
    pivot = RevoluteJoint(
        name="pivot",
        parent_port=("ground", "ref"),
        child_port=("bob", "ref"),
        axis=(1.0, 0.0, 0.0),
        angle_eq=0.0,
        friction=friction,
        shaft_inertia=shaft,
    )
    return MultibodyModel(
        name="pendulum",
        bodies=(bob,),
        connections=(pivot,),
        acceleration=tuple(float(v) for v in accel),
    )


# ---------------------------------------------------------------------------
# analytic pendulum
# ---------------------------------------------------------------------------


def test_pendulum_undamped_eigenvalues():
    lm = assemble(_pendulum())
    lam = np.linalg.eigvals(sample_model(lm, {})[0])
    lam = sorted(lam, key=lambda z: z.imag)
    w0 = math.sqrt(G / 1.0)
    assert abs(lam[0] - (-1j * w0)) / w0 <= 1e-9
    assert abs(lam[1] - (+1j * w0)) / w0 <= 1e-9


def test_pendulum_damped_closed_form():
    m, length, kj, jj = 2.0, 0.7, 0.4, 1e-8
    lm = assemble(_pendulum(m, length, friction=kj, shaft=jj))
    lam = np.linalg.eigvals(sample_model(lm, {})[0])
    inertia = m * length ** 2 + jj
    roots = np.roots([inertia, kj, m * G * length])
    np.testing.assert_allclose(
        sorted(lam, key=lambda z: z.imag),
        sorted(roots, key=lambda z: z.imag),
        atol=1e-9,
    )


def test_pendulum_torque_gain():
    """B maps joint torque to angular acceleration 1/(m L^2)."""
    m, length = 2.0, 0.7
    lm = assemble(_pendulum(m, length))
    b = sample_model(lm, {})[1]
    np.testing.assert_allclose(b[0, 0], 1.0 / (m * length ** 2), rtol=1e-9)
    np.testing.assert_allclose(b[1, 0], 0.0, atol=1e-14)


# ---------------------------------------------------------------------------
# the arm model: equilibrium values with hand-computed oracles
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def arm():
    return load_model(MODELS / "two_link_arm.yaml")


@pytest.fixture(scope="module")
def arm_lm(arm):
    return assemble(arm)


def test_arm_order_and_names(arm_lm):
    assert arm_lm.order == 4
    assert arm_lm.state_names == (
        "shoulder.thetadot",
        "elbow.thetadot",
        "shoulder.theta",
        "elbow.theta",
    )
    assert arm_lm.input_names == ("shoulder.Cm", "elbow.Cm")


def test_arm_equilibrium_torques(arm_lm):
    """Nominal: link1 vertical, link2 horizontal (-y).

    Elbow torque balances the gravity moment of link2 + payload:
    -(m2 rho2 + m3 L2) g.  The shoulder sees the same lever arms (link1 is
    vertical, so it adds no moment).
    """
    eq = arm_lm.equilibrium
    expected = -(2.0 * 0.5 + 5.0 * 1.0) * G
    assert abs(eq.torque_nominal("elbow") - expected) <= 1e-9
    assert abs(eq.torque_nominal("shoulder") - expected) <= 1e-9


def test_arm_root_reaction_supports_total_weight(arm_lm):
    r = np.asarray(arm_lm.equilibrium.root_reaction.nominal).ravel()
    assert abs(r[2] - 10.0 * G) <= 1e-9  # m1 + m2 + m3 = 10 kg
    assert abs(r[0]) <= 1e-9 and abs(r[1]) <= 1e-9


def test_arm_parameter_registry(arm_lm):
    assert set(arm_lm.parameters) == {
        "m1", "J1", "rho1", "L2", "m3", "t_t1", "t_t2"
    }


# ---------------------------------------------------------------------------
# sampling vs frozen re-assembly
# ---------------------------------------------------------------------------


def test_sample_matches_frozen_reassembly(arm, arm_lm):
    rng = np.random.default_rng(42)
    for _ in range(5):
        pt = sample_point(arm_lm.parameters, rng)
        a, b, _, _ = sample_model(arm_lm, pt)
        frozen = assemble(freeze_model(arm, pt))
        a2, b2, _, _ = sample_model(frozen, {})
        assert np.linalg.norm(a - a2) / np.linalg.norm(a2) <= 1e-8
        assert np.linalg.norm(b - b2) / np.linalg.norm(b2) <= 1e-8


def test_strict_sampling_rejects_out_of_bounds(arm_lm):
    with pytest.raises(lft.EvaluationError):
        sample_model(arm_lm, {"m1": 100.0}, strict=True)
    sample_model(arm_lm, {"m1": 100.0}, strict=False)  # extrapolates quietly


# ---------------------------------------------------------------------------
# reduction flag
# ---------------------------------------------------------------------------


def test_no_reduce_evaluates_identically(arm):
    lm_red = assemble(arm)
    lm_raw = assemble(arm, reduce=False)
    rng = np.random.default_rng(7)
    for _ in range(10):
        pt = sample_point(lm_red.parameters, rng)
        a1, b1, _, _ = sample_model(lm_red, pt)
        a2, b2, _, _ = sample_model(lm_raw, pt)
        assert np.linalg.norm(a1 - a2) / np.linalg.norm(a2) <= 1e-8
        assert np.linalg.norm(b1 - b2) / max(np.linalg.norm(b2), 1.0) <= 1e-8
    for name in lm_red.parameters:
        assert lm_red.a.occurrences(name) <= lm_raw.a.occurrences(name)
        assert lm_red.b.occurrences(name) <= lm_raw.b.occurrences(name)


# ---------------------------------------------------------------------------
# modes helper
# ---------------------------------------------------------------------------


def test_modes_frequency_and_damping():
    lm = assemble(_pendulum(friction=0.4, shaft=1e-8))
    md = modes(sample_model(lm, {})[0])
    assert len(md) == 2
    for lam, f, z in md:
        assert abs(f - abs(lam) / (2 * math.pi)) <= 1e-12
        assert abs(z - (-lam.real / abs(lam))) <= 1e-12
        assert z > 0  # damped


# ---------------------------------------------------------------------------
# structural validation
# ---------------------------------------------------------------------------


def test_two_parents_rejected():
    m = _pendulum()
    extra = RevoluteJoint(
        name="pivot2",
        parent_port=("ground", "ref"),
        child_port=("bob", "ref"),
        axis=(1.0, 0.0, 0.0),
    )
    with pytest.raises(AssemblyError):
        MultibodyModel(
            name="bad",
            bodies=m.bodies,
            connections=m.connections + (extra,),
            acceleration=m.acceleration,
        )


def test_disconnected_body_rejected():
    m = _pendulum()
    orphan = RigidBody(
        name="orphan",
        mass=1.0,
        inertia_cog=np.zeros((3, 3)),
        cog_offset=(0, 0, 0),
        dynamics_role=DynamicsRole.INVERSE,
    )
    with pytest.raises(AssemblyError):
        MultibodyModel(
            name="bad",
            bodies=m.bodies + (orphan,),
            connections=m.connections,
            acceleration=m.acceleration,
        )


def test_unbalanced_free_root_raises_trim_error():
    """A lateral force on a retained root DOF breaks the trim.

    (An imbalance along a masked-out DOF, e.g. removing the buoyancy with
    translation z not retained, is reacted by the implicit constraint and
    is therefore not a trim failure.)
    """
    balloon = load_model(MODELS / "balloon_planar.yaml")
    lateral = ExternalForce(body="balloon", port="chain", force=(0.0, 50.0, 0.0))
    unbalanced = MultibodyModel(
        name="unbalanced",
        bodies=balloon.bodies,
        connections=balloon.connections,
        acceleration=balloon.acceleration,
        root=balloon.root,
        external_forces=balloon.external_forces + (lateral,),
        root_damping=balloon.root_damping,
    )
    with pytest.raises(TrimError):
        assemble(unbalanced)


def test_balance_weight_force_scales_with_parameters():
    balloon = load_model(MODELS / "balloon_planar.yaml")
    lm = assemble(balloon)
    # residual stays zero for off-nominal masses because buoyancy tracks them
    for pt in ({"m11": 0.0}, {"m11": 500.0}, {"l6": 60.0}):
        frozen = assemble(freeze_model(balloon, pt))
        r = np.asarray(frozen.equilibrium.root_reaction.nominal).ravel()
        assert np.max(np.abs(r)) <= 1e-8
    assert lm.order == 26
