"""Rigid bodies: direct dynamics at a port, equilibrium wrench, stiffness,
and the linearized forward/inverse dynamics blocks.

Conventions
-----------
* All body quantities are expressed in the body reference frame R_b.
* A body is located by a *reference port* (the origin of R_b); every other
  port and the centre of gravity are given relative to it, in R_b.
* ``a`` is the uniform acceleration of the working reference frame
  (for gravity g pointing along -z, a = +g z so that a static body feels
  its weight -m g z through W = D (x'' + a6)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mblft import lft
from mblft import spatial as sp

__all__ = [
    "DynamicsRole",
    "RigidBody",
    "DirectDynamics",
    "StiffnessMatrix",
    "LinearBlock",
    "BodyError",
    "direct_dynamics_cog",
    "direct_dynamics_at_port",
    "newton_euler_at_port",
    "equilibrium_wrench",
    "acceleration_terms",
    "stiffness_matrix",
    "linearized_forward_block",
    "linearized_inverse_block",
]

Scalar = "float | lft.Param | lft.Expr"

ALL_DOF = (0, 1, 2, 3, 4, 5)


class BodyError(ValueError):
    pass


class DynamicsRole(Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


def _scalar_grid(exprs) -> list[dict[str, float]]:
    """Nominal point plus all parameter-box corners of the given exprs."""
    params: dict[str, lft.Param] = {}
    for e in exprs:
        for p in lft.as_expr(e).params():
            params[p.name] = p
    names = sorted(params)
    points = [{n: params[n].nominal for n in names}]
    if names:
        for mask in range(2 ** len(names)):
            pt = {}
            for i, n in enumerate(names):
                p = params[n]
                pt[n] = p.lower if (mask >> i) & 1 else p.upper
            points.append(pt)
    return points


def _as_scalar_matrix(entries, shape) -> np.ndarray:
    arr = np.asarray(entries, dtype=object)
    if arr.shape != shape:
        raise BodyError(f"expected shape {shape}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class RigidBody:
    """Rigid body with possibly Param-valued mass properties.

    ``inertia_cog`` is taken about the centre of gravity, in R_b axes.
    ``cog_offset`` and port positions are vectors from the reference port,
    in R_b.
    """

    name: str
    mass: object
    inertia_cog: object
    cog_offset: object
    ports: tuple = ()
    dynamics_role: DynamicsRole = DynamicsRole.FORWARD
    dof_mask: tuple = ALL_DOF

    def __post_init__(self):
        object.__setattr__(
            self, "inertia_cog", _as_scalar_matrix(self.inertia_cog, (3, 3))
        )
        object.__setattr__(
            self, "cog_offset", _as_scalar_matrix(self.cog_offset, (3,))
        )
        ports = tuple(
            (str(n), _as_scalar_matrix(p, (3,))) for n, p in self.ports
        )
        names = [n for n, _ in ports]
        if len(set(names)) != len(names):
            raise BodyError(f"body {self.name!r}: duplicate port names")
        for n, p in ports:
            for v in p:
                e = lft.as_expr(v)
                val = e.value({q.name: q.nominal for q in e.params()})
                if not np.isfinite(val):
                    raise BodyError(
                        f"body {self.name!r}: port {n!r} position must be a "
                        "finite 3-vector"
                    )
        object.__setattr__(self, "ports", ports)
        mask = tuple(sorted(set(int(i) for i in self.dof_mask)))
        if not mask or any(i < 0 or i > 5 for i in mask):
            raise BodyError(f"body {self.name!r}: dof_mask must be within 0..5")
        if mask != ALL_DOF and self.dynamics_role is not DynamicsRole.FORWARD:
            raise BodyError(
                f"body {self.name!r}: dof_mask applies to forward role only"
            )
        object.__setattr__(self, "dof_mask", mask)
        self._check_mass_properties()

    # -- validation --------------------------------------------------------
    def _check_mass_properties(self):
        exprs = [self.mass] + [self.inertia_cog[i, j] for i in range(3) for j in range(3)]
        # Inverse-dynamics bodies never require an invertible mass matrix, so
        # a vanishing mass at a box corner (e.g. a releasable ballast) is
        # acceptable there; forward bodies must stay strictly positive.
        mass_ok = (
            (lambda m: m >= 0.0)
            if self.dynamics_role is DynamicsRole.INVERSE
            else (lambda m: m > 0.0)
        )
        for pt in _scalar_grid(exprs):
            m = lft.as_expr(self.mass).value(pt)
            if not mass_ok(m):
                raise BodyError(
                    f"body {self.name!r}: mass must be positive over the "
                    f"parameter box (got {m} at {pt})"
                )
        nominal_pt = _scalar_grid(exprs)[0]
        j = self.inertia_nominal
        if np.max(np.abs(j - j.T)) > 1e-12:
            raise BodyError(f"body {self.name!r}: inertia must be symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (j + j.T))
        if np.min(eigs) < -1e-12:
            raise BodyError(
                f"body {self.name!r}: inertia must be positive semidefinite"
            )
        if (
            self.dynamics_role is DynamicsRole.FORWARD
            and np.max(np.abs(j)) == 0.0
            and self.dof_mask == ALL_DOF
        ):
            raise BodyError(
                f"body {self.name!r}: a point mass (zero inertia) can only "
                "be used in the inverse dynamics role or with rotational "
                "DOF masked out"
            )
        del nominal_pt

    # -- accessors ---------------------------------------------------------
    @property
    def inertia_nominal(self) -> np.ndarray:
        out = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                e = lft.as_expr(self.inertia_cog[i, j])
                out[i, j] = e.value({p.name: p.nominal for p in e.params()})
        return out

    def port_position(self, port: str) -> np.ndarray:
        """Port position relative to the reference port (Scalar entries)."""
        if port == "ref":
            return np.zeros(3, dtype=object)
        for n, p in self.ports:
            if n == port:
                return p
        raise BodyError(f"body {self.name!r} has no port {port!r}")

    def port_position_value(self, port: str, point) -> np.ndarray:
        return np.array(
            [lft.as_expr(v).value(point) for v in self.port_position(port)],
            dtype=float,
        )

    def port_position_lft(self, port: str) -> lft.LftMatrix:
        return sp.as_lft(list(self.port_position(port)))

    def cog_offset_lft(self) -> lft.LftMatrix:
        return sp.as_lft(list(self.cog_offset))

    def cog_offset_value(self, point) -> np.ndarray:
        return np.array(
            [lft.as_expr(v).value(point) for v in self.cog_offset], dtype=float
        )

    def mass_value(self, point) -> float:
        return lft.as_expr(self.mass).value(point)

    def inertia_value(self, point) -> np.ndarray:
        return np.array(
            [
                [lft.as_expr(self.inertia_cog[i, j]).value(point) for j in range(3)]
                for i in range(3)
            ],
            dtype=float,
        )


@dataclass(frozen=True)
class DirectDynamics:
    """6x6 mass/inertia operator of a body expressed at one of its ports."""

    matrix: lft.LftMatrix
    point: str
    body: str

    def __post_init__(self):
        nom = self.matrix.nominal
        if np.max(np.abs(nom - nom.T)) > 1e-12:
            raise BodyError(
                f"direct dynamics at {self.body}/{self.point} not symmetric"
            )


@dataclass(frozen=True)
class StiffnessMatrix:
    """Acceleration-induced stiffness: K = [0_{6x3}, D * d(a6)/d(theta)]."""

    matrix: lft.LftMatrix
    point: str
    body: str

    def __post_init__(self):
        if np.max(np.abs(self.matrix.nominal[:, :3])) != 0.0:
            raise BodyError("stiffness columns 1-3 must be exactly zero")


@dataclass(frozen=True)
class LinearBlock:
    """A linear(ized) element block with Param-valued coefficient matrices."""

    a: lft.LftMatrix
    b: lft.LftMatrix
    c: lft.LftMatrix
    d: lft.LftMatrix
    state_names: tuple
    input_names: tuple
    output_names: tuple

    @property
    def nstates(self) -> int:
        return len(self.state_names)

    def evaluate(self, point):
        return (
            self.a.evaluate(point),
            self.b.evaluate(point),
            self.c.evaluate(point),
            self.d.evaluate(point),
        )


# ---------------------------------------------------------------------------
# Direct dynamics
# ---------------------------------------------------------------------------


def direct_dynamics_cog(body: RigidBody) -> lft.LftMatrix:
    """D at the centre of gravity: blockdiag(m I3, J_cog)."""
    m = lft.lift_scalar(body.mass)
    m3 = lft.blockdiag([m, m, m])
    j = lft.lift_matrix([list(row) for row in body.inertia_cog])
    return lft.blockdiag([m3, j])


def direct_dynamics_at_port(body: RigidBody, port: str = "ref") -> DirectDynamics:
    """Transport D from the CoG to a port by the tau congruence."""
    offset_bp = sp.as_lft(list(np.asarray(body.port_position(port), dtype=object)
                               - body.cog_offset))
    tau = sp.tau_lft(offset_bp)
    mat = tau.T @ direct_dynamics_cog(body) @ tau
    return DirectDynamics(matrix=mat, point=port, body=body.name)


def _d_at_port_numeric(body: RigidBody, port: str, point) -> np.ndarray:
    o = body.port_position_value(port, point) - body.cog_offset_value(point)
    tau = sp.tau_matrix(o)
    m = body.mass_value(point)
    d_cog = np.zeros((6, 6))
    d_cog[:3, :3] = m * np.eye(3)
    d_cog[3:, 3:] = body.inertia_value(point)
    return tau.T @ d_cog @ tau


def nonlinear_terms(body: RigidBody, port: str, omega, point) -> np.ndarray:
    """Velocity-dependent wrench NL(P, omega) at the port, body frame."""
    w = np.asarray(omega, dtype=float).reshape(3)
    o = body.port_position_value(port, point) - body.cog_offset_value(point)
    m = body.mass_value(point)
    j = body.inertia_value(point)
    so = sp.skew(o)
    lin = m * np.cross(w, so @ w)
    ang = np.cross(w, (j - m * so @ so) @ w)
    return np.concatenate([lin, ang])


def newton_euler_at_port(
    body: RigidBody, port: str, xpp, omega, a6_body, point=None
) -> np.ndarray:
    """Nonlinear Newton-Euler wrench at a port (numeric, body frame)."""
    if point is None:
        point = {p.name: p.nominal for p in direct_dynamics_at_port(body, port).matrix.delta}
        for e in [body.mass] + list(body.cog_offset) + [
            body.inertia_cog[i, j] for i in range(3) for j in range(3)
        ] + [v for _, pos in body.ports for v in pos]:
            for p in lft.as_expr(e).params():
                point.setdefault(p.name, p.nominal)
    d = _d_at_port_numeric(body, port, point)
    xpp = np.asarray(xpp, dtype=float).reshape(6)
    a6 = np.asarray(a6_body, dtype=float).reshape(6)
    return d @ (xpp + a6) + nonlinear_terms(body, port, omega, point)


# ---------------------------------------------------------------------------
# Equilibrium and linearized blocks
# ---------------------------------------------------------------------------


def acceleration_terms(a_ref, theta_eq) -> tuple[lft.LftMatrix, lft.LftMatrix]:
    """Equilibrium a6 (6x1) in R_b and its derivative w.r.t. Euler angles.

    ``a_ref`` is the frame acceleration in the working reference frame R;
    ``theta_eq`` holds three angles, each a float or a HalfTanParam.
    Uses d(P^T a)/d(theta) = skew(P^T a) Gamma(theta).
    """
    p = sp.dcm_lft(theta_eq)
    a_col = lft.constant(np.asarray(a_ref, dtype=float).reshape(3, 1))
    a_body = p.T @ a_col
    a6 = lft.vstack([a_body, lft.zeros(3, 1)])
    da_lin = sp.skew_lft(a_body) @ sp.gamma_lft(theta_eq)
    da6 = lft.vstack([da_lin, lft.zeros(3, 3)])
    return a6, da6


def equilibrium_wrench(body: RigidBody, port: str, a6_body) -> lft.LftMatrix:
    """Static wrench W = D_P a6 at a port, Param-valued (6x1 column)."""
    d = direct_dynamics_at_port(body, port).matrix
    return d @ sp.as_lft(np.asarray(a6_body, dtype=object).reshape(6)) \
        if not isinstance(a6_body, lft.LftMatrix) else d @ a6_body


def stiffness_matrix(body: RigidBody, port: str, da6) -> StiffnessMatrix:
    """K_P = [0_{6x3}, D_P * d(a6)/d(theta)] (6x6, Param-valued)."""
    d = direct_dynamics_at_port(body, port).matrix
    da6 = da6 if isinstance(da6, lft.LftMatrix) else lft.constant(
        np.asarray(da6, dtype=float).reshape(6, 3)
    )
    mat = lft.hstack([lft.zeros(6, 3), d @ da6])
    return StiffnessMatrix(matrix=mat, point=port, body=body.name)


def _gamma6_inv(theta_eq) -> lft.LftMatrix:
    return lft.blockdiag([lft.eye(3), sp.gamma_lft(theta_eq).inv()])


def linearized_forward_block(
    body: RigidBody, port: str, a_ref, theta_eq
) -> LinearBlock:
    """Forward dynamics block: wrench sum in, motion out (2*|mask| states).

    States: masked components of (delta dual velocity, delta pose), both in
    R_b; the pose position measures displacement from the equilibrium
    location so the kinematics are exactly diag(I3, Gamma)^-1.
    """
    if body.dynamics_role is not DynamicsRole.FORWARD:
        raise BodyError(f"body {body.name!r} is not a forward-dynamics body")
    mask = list(body.dof_mask)
    nd = len(mask)
    _, da6 = acceleration_terms(a_ref, theta_eq)
    dmat = direct_dynamics_at_port(body, port).matrix
    kmat = stiffness_matrix(body, port, da6).matrix
    dm = dmat.submatrix(mask, mask)
    km = kmat.submatrix(mask, mask)
    if np.linalg.cond(dm.nominal) > 1e12:
        raise BodyError(
            f"body {body.name!r}: direct dynamics singular on unmasked DOF"
        )
    dinv = dm.inv()
    gain = dinv @ km
    e = _gamma6_inv(theta_eq).submatrix(mask, mask)
    z = lft.zeros(nd, nd)
    a = lft.block([[z, -gain], [e, z]])
    b = lft.vstack([dinv, lft.zeros(nd, nd)])
    c = lft.block([[z, -gain], [lft.eye(nd), z], [z, lft.eye(nd)]])
    d = lft.vstack([dinv, lft.zeros(2 * nd, nd)])
    axes = ("vx", "vy", "vz", "wx", "wy", "wz")
    pos = ("x", "y", "z", "t1", "t2", "t3")
    states = tuple(f"{body.name}.{axes[i]}" for i in mask) + tuple(
        f"{body.name}.{pos[i]}" for i in mask
    )
    inputs = tuple(f"{body.name}.dW[{i}]" for i in mask)
    outputs = (
        tuple(f"{body.name}.ddx[{i}]" for i in mask)
        + tuple(f"{body.name}.dx'[{i}]" for i in mask)
        + tuple(f"{body.name}.dx[{i}]" for i in mask)
    )
    return LinearBlock(a, b, c, d, states, inputs, outputs)


def linearized_inverse_block(
    body: RigidBody, port: str, a_ref, theta_eq
) -> LinearBlock:
    """Inverse dynamics block: motion (18) in, wrench (6) out, stateless.

    delta W = D_P delta x'' + K_P delta x; the velocity rows do not appear
    because the equilibrium angular velocity is zero.
    """
    _, da6 = acceleration_terms(a_ref, theta_eq)
    dmat = direct_dynamics_at_port(body, port).matrix
    kmat = stiffness_matrix(body, port, da6).matrix
    gain = lft.hstack([dmat, lft.zeros(6, 6), kmat])
    states: tuple = ()
    inputs = tuple(f"{body.name}.dm[{i}]" for i in range(18))
    outputs = tuple(f"{body.name}.dW[{i}]" for i in range(6))
    return LinearBlock(
        lft.zeros(0, 0), lft.zeros(0, 18), lft.zeros(6, 0), gain,
        states, inputs, outputs,
    )
