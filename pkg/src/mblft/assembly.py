"""Tree assembly: equilibrium geometry, equilibrium wrenches, and the
linearized parameter-dependent (LFT) state-space model.

The assembly flattens the element-by-element linearized models onto the
tree's generalized coordinates. With a free root the generalized
velocities are nu = (unmasked root dual-velocity components in the root
body frame, joint rates in tree order); with a grounded root only the
joint rates remain. The state vector is

    x = [ nu ; chi ]   with   chi = (root pose components, joint angles)

in the order [root velocities, joint rates, root pose, joint angles].
Root pose position states measure body-frame displacement from the
equilibrium location.

The linearized equations of motion are accumulated as

    M d(nu)/dt + C nu + K chi + B_hat u = 0,

with every coefficient a Param-valued LftMatrix, and realized as

    A = [[-M^-1 C, -M^-1 K], [G, 0]],   B = [[-M^-1 B_hat], [0]],

where G holds the (constant) equilibrium kinematics diag(I, Gamma^-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mblft import lft
from mblft import spatial as sp
from mblft.bodies import DynamicsRole, RigidBody, direct_dynamics_at_port
from mblft.joints import RevoluteJoint, RigidConnection, revolute_dcm_lft

__all__ = [
    "AssemblyError",
    "TrimError",
    "ExternalForce",
    "RootSpec",
    "MultibodyModel",
    "EquilibriumSolution",
    "LinearLftModel",
    "step1_geometry",
    "step2_wrenches",
    "step3_linearize",
    "assemble",
    "sample_model",
    "modes",
    "freeze_model",
    "sample_point",
]

GROUND = "ground"


class AssemblyError(ValueError):
    pass


class TrimError(AssemblyError):
    pass


@dataclass(frozen=True)
class ExternalForce:
    """Constant-reference-frame force applied at a body port.

    ``force`` is a 3-vector in the working reference frame R (entries may
    be Param-valued). With ``balance_weight`` the force is replaced by
    (total model mass) * (frame acceleration), which exactly cancels the
    net static load of the tree (e.g. buoyancy sized to the total weight).
    """

    body: str
    port: str
    force: object = (0.0, 0.0, 0.0)
    balance_weight: bool = False


@dataclass(frozen=True)
class RootSpec:
    """Root of the tree: either the ground or a free forward-role body.

    ``euler`` / ``position`` give the numeric equilibrium pose of the
    ground attachment frame or of the free root body in R.
    """

    kind: str = GROUND
    euler: tuple = (0.0, 0.0, 0.0)
    position: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in (GROUND, "free"):
            raise AssemblyError("root kind must be 'ground' or 'free'")
        object.__setattr__(self, "euler", tuple(float(v) for v in self.euler))
        object.__setattr__(
            self, "position", tuple(float(v) for v in self.position)
        )


@dataclass(frozen=True)
class MultibodyModel:
    """Tree of rigid bodies linked by rigid connections / revolute joints."""

    name: str
    bodies: tuple
    connections: tuple
    acceleration: tuple  # frame acceleration a in R (= -gravity vector)
    root: RootSpec = field(default_factory=RootSpec)
    external_forces: tuple = ()
    root_damping: object = None  # 6x6, wrench -root_damping @ x' at root ref
    inputs: tuple = ()  # ("torque", joint) | ("wrench", body, port)
    outputs: tuple = ()  # state names; empty = all states
    accelerating_trim: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bodies", tuple(self.bodies))
        object.__setattr__(self, "connections", tuple(self.connections))
        object.__setattr__(
            self,
            "acceleration",
            tuple(float(v) for v in np.asarray(self.acceleration).reshape(3)),
        )
        object.__setattr__(self, "external_forces", tuple(self.external_forces))
        if self.root_damping is not None:
            rd = np.asarray(self.root_damping, dtype=float)
            if rd.shape != (6, 6):
                raise AssemblyError("root_damping must be a 6x6 matrix")
            object.__setattr__(self, "root_damping", rd)
        if not self.inputs:
            ins = tuple(
                ("torque", c.name)
                for c in self.connections
                if isinstance(c, RevoluteJoint)
            )
            object.__setattr__(self, "inputs", ins)
        else:
            object.__setattr__(self, "inputs", tuple(tuple(i) for i in self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        self._validate_tree()

    # -- structure -----------------------------------------------------
    def body(self, name: str) -> RigidBody:
        for b in self.bodies:
            if b.name == name:
                return b
        raise AssemblyError(f"unknown body {name!r}")

    @property
    def root_body(self) -> RigidBody:
        fwd = [b for b in self.bodies if b.dynamics_role is DynamicsRole.FORWARD]
        if self.root.kind == GROUND:
            if fwd:
                raise AssemblyError(
                    "a grounded model must use inverse-role bodies only"
                )
            raise AssemblyError("grounded model has no root body")
        if len(fwd) != 1:
            raise AssemblyError("a free-root model needs exactly one forward body")
        return fwd[0]

    def _validate_tree(self):
        names = [b.name for b in self.bodies]
        if len(set(names)) != len(names):
            raise AssemblyError("duplicate body names")
        root_name = GROUND if self.root.kind == GROUND else self.root_body.name
        child_of = {}
        for c in self.connections:
            pb, pp = c.parent_port
            cb, cp = c.child_port
            if pb != GROUND:
                self.body(pb).port_position(pp)
            elif self.root.kind != GROUND:
                raise AssemblyError("ground parent in a free-root model")
            self.body(cb).port_position(cp)
            if cb in child_of:
                raise AssemblyError(f"body {cb!r} has two parents (not a tree)")
            if cb == root_name:
                raise AssemblyError("root body cannot be a child")
            child_of[cb] = pb
        expected = set(names) - {root_name}
        if set(child_of) != expected:
            missing = expected - set(child_of)
            raise AssemblyError(f"disconnected bodies: {sorted(missing)}")
        # reachability (cycle through ground impossible by construction,
        # but verify every chain terminates at the root)
        for b in expected:
            seen = set()
            cur = b
            while cur != root_name and cur != GROUND:
                if cur in seen:
                    raise AssemblyError("connection graph contains a cycle")
                seen.add(cur)
                cur = child_of[cur]
        for spec in self.inputs:
            if spec[0] == "torque":
                if not any(
                    isinstance(c, RevoluteJoint) and c.name == spec[1]
                    for c in self.connections
                ):
                    raise AssemblyError(f"torque input on unknown joint {spec[1]!r}")
            elif spec[0] == "wrench":
                self.body(spec[1]).port_position(spec[2])
            else:
                raise AssemblyError(f"unknown input spec {spec!r}")

    # -- parameters ------------------------------------------------------
    def parameters(self) -> dict:
        """Registry of every Param in the model, keyed by name."""
        reg: dict[str, lft.Param] = {}

        def add(e):
            for p in lft.as_expr(e).params():
                if p.name in reg and reg[p.name] != p:
                    raise AssemblyError(
                        f"conflicting definitions of parameter {p.name!r}"
                    )
                reg[p.name] = p

        for b in self.bodies:
            add(b.mass)
            for v in b.cog_offset:
                add(v)
            for i in range(3):
                for j in range(3):
                    add(b.inertia_cog[i, j])
            for _, pos in b.ports:
                for v in pos:
                    add(v)
        for c in self.connections:
            if isinstance(c, RevoluteJoint) and isinstance(
                c.angle_eq, lft.HalfTanParam
            ):
                add(lft.Ref(c.angle_eq.param))
        for f in self.external_forces:
            for v in np.asarray(f.force, dtype=object).reshape(3):
                add(v)
        return reg

    def total_mass_expr(self):
        total = lft.as_expr(0.0)
        for b in self.bodies:
            total = total + lft.as_expr(b.mass)
        return total

    @property
    def joints(self) -> tuple:
        return tuple(
            c for c in self._tree_order() if isinstance(c, RevoluteJoint)
        )

    def _tree_order(self) -> tuple:
        """Connections in depth-first order from the root."""
        root_name = GROUND if self.root.kind == GROUND else self.root_body.name
        by_parent: dict[str, list] = {}
        for c in self.connections:
            by_parent.setdefault(c.parent_port[0], []).append(c)
        out = []
        stack = [root_name]
        while stack:
            cur = stack.pop()
            kids = by_parent.get(cur, [])
            out.extend(kids)
            for c in reversed(kids):
                stack.append(c.child_port[0])
        if len(out) != len(self.connections):
            raise AssemblyError("disconnected connections")
        return tuple(out)


# ---------------------------------------------------------------------------
# Step 1: geometry at equilibrium
# ---------------------------------------------------------------------------


@dataclass
class _BodyGeo:
    body: object  # RigidBody or None for ground
    dcm: lft.LftMatrix  # body frame -> R
    jhat: lft.LftMatrix  # 6 x nq acceleration/velocity Jacobian (body frame)
    phi: lft.LftMatrix  # 3 x nq infinitesimal-rotation map (body frame)
    abar: lft.LftMatrix  # 3 x 1 frame acceleration in body frame
    pos: lft.LftMatrix  # 3 x 1 reference-port position in R
    theta_nom: np.ndarray  # numeric equilibrium Euler angles


@dataclass
class GeometryContext:
    model: MultibodyModel
    order: tuple  # connections in tree order
    joint_index: dict  # joint name -> index among revolute joints
    nq: int
    k: int  # unmasked root DOF count
    mask: tuple
    geo: dict  # body name (or GROUND) -> _BodyGeo
    gamma0: np.ndarray  # root Euler-rate map at equilibrium


def _reduce(m: lft.LftMatrix) -> lft.LftMatrix:
    return lft.reduce_lft(m)


def step1_geometry(model: MultibodyModel) -> GeometryContext:
    """Root-to-leaf pass: equilibrium orientations, Jacobians, accelerations."""
    order = model._tree_order()
    joints = [c for c in order if isinstance(c, RevoluteJoint)]
    joint_index = {c.name: i for i, c in enumerate(joints)}
    n = len(joints)
    if model.root.kind == GROUND:
        mask: tuple = ()
    else:
        mask = model.root_body.dof_mask
    k = len(mask)
    nq = k + n
    euler0 = np.asarray(model.root.euler, dtype=float)
    dcm0 = sp.dcm_from_euler(sp.EulerState(euler0)).matrix
    gamma0 = sp.euler_rate_map(sp.EulerState(euler0))
    a_r = np.asarray(model.acceleration, dtype=float).reshape(3, 1)

    geo: dict[str, _BodyGeo] = {}
    root_name = GROUND if model.root.kind == GROUND else model.root_body.name
    jhat0 = np.zeros((6, nq))
    for col, dof in enumerate(mask):
        jhat0[dof, col] = 1.0
    phi0 = np.zeros((3, nq))
    for col, dof in enumerate(mask):
        if dof >= 3:
            phi0[:, col] = 0.0  # velocity columns do not enter phi
    # phi maps *pose* coordinates; root pose columns share the nu layout
    for col, dof in enumerate(mask):
        if dof >= 3:
            phi0[:, col] = gamma0[:, dof - 3]
    geo[root_name] = _BodyGeo(
        body=None if root_name == GROUND else model.root_body,
        dcm=lft.constant(dcm0),
        jhat=lft.constant(jhat0),
        phi=lft.constant(phi0),
        abar=lft.constant(dcm0.T @ a_r),
        pos=lft.constant(np.asarray(model.root.position, float).reshape(3, 1)),
        theta_nom=euler0,
    )

    for c in order:
        pb, pp = c.parent_port
        cb, cp = c.child_port
        parent = geo[pb]
        body = model.body(cb)
        qpos = (
            lft.zeros(3, 1)
            if pb == GROUND
            else model.body(pb).port_position_lft(pp)
        )
        cpos = body.port_position_lft(cp)
        if isinstance(c, RevoluteJoint):
            p_ab = revolute_dcm_lft(c)
        else:
            p_ab = lft.constant(c.fixed_dcm)
        p_ab = _reduce(p_ab)
        at_port = sp.tau_lft(-qpos) @ parent.jhat
        j_joint = sp.p2_lft(p_ab).T @ at_port
        phi = p_ab.T @ parent.phi
        if isinstance(c, RevoluteJoint):
            e_nu = np.zeros((1, nq))
            e_nu[0, k + joint_index[c.name]] = 1.0
            j_joint = j_joint + lft.constant(
                c.r6.reshape(6, 1)
            ) @ lft.constant(e_nu)
            phi = phi + lft.constant(c.axis.reshape(3, 1)) @ lft.constant(e_nu)
        jhat = _reduce(sp.tau_lft(cpos) @ j_joint)
        phi = _reduce(phi)
        dcm = _reduce(parent.dcm @ p_ab)
        abar = _reduce(p_ab.T @ parent.abar)
        jp = parent.pos + parent.dcm @ qpos
        pos = _reduce(jp - dcm @ cpos)
        theta_nom = sp.euler_from_dcm(dcm.nominal).angles
        geo[cb] = _BodyGeo(body, dcm, jhat, phi, abar, pos, theta_nom)

    return GeometryContext(
        model=model,
        order=order,
        joint_index=joint_index,
        nq=nq,
        k=k,
        mask=mask,
        geo=geo,
        gamma0=gamma0,
    )


# ---------------------------------------------------------------------------
# Step 2: wrenches at equilibrium
# ---------------------------------------------------------------------------


@dataclass
class EquilibriumSolution:
    """Equilibrium geometry, loads, and driving torques (Param-valued)."""

    geometry: GeometryContext
    inbound: dict  # body name -> 6x1 LftMatrix (frame j, at ref port)
    joint_load: dict  # joint name -> 6x1 LftMatrix S_c (child frame, at joint)
    torque: dict  # joint name -> 1x1 LftMatrix equilibrium C_m
    root_reaction: lft.LftMatrix  # 6x1: ground reaction or free-root residual

    @property
    def model(self) -> MultibodyModel:
        return self.geometry.model

    def torque_nominal(self, joint: str) -> float:
        return float(self.torque[joint].nominal[0, 0])

    def w_aj(self, joint: str) -> lft.LftMatrix:
        """Equilibrium wrench W_A/J = -S_c (child side on the joint)."""
        return -self.joint_load[joint]

    def report(self) -> dict:
        g = self.geometry
        bodies = {
            name: {
                "euler_deg": list(np.degrees(rec.theta_nom)),
                "position": list(rec.pos.nominal.ravel()),
            }
            for name, rec in g.geo.items()
            if name != GROUND
        }
        joints = {
            name: {
                "torque": self.torque_nominal(name),
                "load": list(self.joint_load[name].nominal.ravel()),
            }
            for name in self.torque
        }
        return {
            "bodies": bodies,
            "joints": joints,
            "root_reaction": list(self.root_reaction.nominal.ravel()),
        }


def _resolved_forces(model: MultibodyModel) -> list:
    out = []
    for f in model.external_forces:
        if f.balance_weight:
            total = model.total_mass_expr()
            vec = [total * float(a) for a in model.acceleration]
            out.append(ExternalForce(f.body, f.port, tuple(vec), False))
        else:
            out.append(f)
    return out


def step2_wrenches(model: MultibodyModel, ctx: GeometryContext) -> EquilibriumSolution:
    """Leaf-to-root pass: equilibrium interface wrenches and joint torques."""
    forces = _resolved_forces(model)
    inbound: dict[str, lft.LftMatrix] = {}
    joint_load: dict[str, lft.LftMatrix] = {}
    torque: dict[str, lft.LftMatrix] = {}
    children: dict[str, list] = {}
    for c in ctx.order:
        children.setdefault(c.parent_port[0], []).append(c)

    def visit(name: str) -> lft.LftMatrix:
        rec = ctx.geo[name]
        if name == GROUND:
            ibar = lft.zeros(6, 1)
        else:
            d = direct_dynamics_at_port(rec.body, "ref").matrix
            ibar = d @ lft.vstack([rec.abar, lft.zeros(3, 1)])
            for f in forces:
                if f.body != name:
                    continue
                fcol = sp.as_lft(list(np.asarray(f.force, dtype=object).reshape(3)))
                fbar = rec.dcm.T @ fcol
                p = rec.body.port_position_lft(f.port)
                ibar = ibar - sp.tau_lft(-p).T @ lft.vstack(
                    [fbar, lft.zeros(3, 1)]
                )
        for c in children.get(name, []):
            cb, cp = c.child_port
            child_in = visit(cb)
            cpos = model.body(cb).port_position_lft(cp)
            s_c = _reduce(sp.tau_lft(cpos).T @ child_in)
            if isinstance(c, RevoluteJoint):
                joint_load[c.name] = s_c
                torque[c.name] = _reduce(
                    lft.constant(c.r6.reshape(1, 6)) @ s_c
                )
                p_ab = revolute_dcm_lft(c)
            else:
                p_ab = lft.constant(c.fixed_dcm)
            qpos = (
                lft.zeros(3, 1)
                if name == GROUND
                else model.body(name).port_position_lft(c.parent_port[1])
            )
            ibar = ibar + sp.tau_lft(-qpos).T @ (sp.p2_lft(p_ab) @ s_c)
        ibar = _reduce(ibar)
        if name != GROUND:
            inbound[name] = ibar
        return ibar

    root_name = GROUND if model.root.kind == GROUND else model.root_body.name
    root_in = visit(root_name)
    eq = EquilibriumSolution(
        geometry=ctx,
        inbound=inbound,
        joint_load=joint_load,
        torque=torque,
        root_reaction=root_in,
    )
    if model.root.kind == "free" and not model.accelerating_trim:
        res = root_in.nominal.ravel()[list(ctx.mask)]
        if np.max(np.abs(res)) > 1e-6:
            raise TrimError(
                f"free root is not in equilibrium (residual {res}); balance "
                "the external forces or set accelerating_trim=True"
            )
    return eq


# ---------------------------------------------------------------------------
# Step 3: linearized LFT model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearLftModel:
    """Parameter-dependent linear state-space model in LFT form."""

    a: lft.LftMatrix
    b: lft.LftMatrix
    c: lft.LftMatrix
    d: lft.LftMatrix
    state_names: tuple
    input_names: tuple
    output_names: tuple
    parameters: dict  # name -> Param
    equilibrium: EquilibriumSolution

    @property
    def order(self) -> int:
        return len(self.state_names)

    def delta_summary(self) -> dict:
        """Occurrence counts per parameter and per matrix."""
        out: dict[str, dict] = {}
        for tag, m in (("A", self.a), ("B", self.b)):
            for name, count in m.delta_structure:
                out.setdefault(name, {}).setdefault(tag, 0)
                out[name][tag] += count
        for name, info in out.items():
            info["kind"] = self.parameters[name].kind
        return out

    def to_export_dict(self) -> dict:
        return {
            "format": "mblft-linear-model",
            "version": 1,
            "euler_sequence": "xyz-intrinsic",
            "state_names": list(self.state_names),
            "input_names": list(self.input_names),
            "output_names": list(self.output_names),
            "parameters": {
                name: {
                    "nominal": p.nominal,
                    "lower": p.lower,
                    "upper": p.upper,
                    "kind": p.kind,
                }
                for name, p in self.parameters.items()
            },
            "A": self.a.to_dict(),
            "B": self.b.to_dict(),
            "C": self.c.to_dict(),
            "D": self.d.to_dict(),
            "equilibrium": self.equilibrium.report(),
        }


@dataclass
class _Bundle:
    """Linear coefficients of an interface wrench: W = M nudot + C nu
    + K chi + B u (all LftMatrix, 6 rows)."""

    m: lft.LftMatrix
    c: lft.LftMatrix
    k: lft.LftMatrix
    b: lft.LftMatrix

    def map(self, op) -> "_Bundle":
        return _Bundle(op(self.m), op(self.c), op(self.k), op(self.b))

    def __add__(self, other: "_Bundle") -> "_Bundle":
        return _Bundle(
            self.m + other.m, self.c + other.c, self.k + other.k, self.b + other.b
        )


def _input_layout(model: MultibodyModel) -> tuple:
    names = []
    cols = {}
    for spec in model.inputs:
        if spec[0] == "torque":
            cols[("torque", spec[1])] = len(names)
            names.append(f"{spec[1]}.Cm")
        else:
            cols[("wrench", spec[1], spec[2])] = len(names)
            wn = ("Fx", "Fy", "Fz", "Mx", "My", "Mz")
            names.extend(f"{spec[1]}.{spec[2]}.{w}" for w in wn)
    return tuple(names), cols


def step3_linearize(
    model: MultibodyModel, eq: EquilibriumSolution, reduce: bool = True
) -> LinearLftModel:
    """Assemble the linearized LFT state-space model around the equilibrium."""
    ctx = eq.geometry
    nq, k, mask = ctx.nq, ctx.k, ctx.mask
    n = len(ctx.joint_index)
    if nq == 0:
        raise AssemblyError("model has no degrees of freedom")
    input_names, input_cols = _input_layout(model)
    nu_in = len(input_names)
    forces = _resolved_forces(model)
    children: dict[str, list] = {}
    for c in ctx.order:
        children.setdefault(c.parent_port[0], []).append(c)

    joint_rows: dict[str, _Bundle] = {}

    def visit(name: str) -> _Bundle:
        rec = ctx.geo[name]
        z6 = lft.zeros(3, nq)
        if name == GROUND:
            bun = _Bundle(
                lft.zeros(6, nq), lft.zeros(6, nq), lft.zeros(6, nq),
                lft.zeros(6, nu_in),
            )
        else:
            d = direct_dynamics_at_port(rec.body, "ref").matrix
            m_part = d @ rec.jhat
            k_part = d @ lft.vstack([sp.skew_lft(rec.abar) @ rec.phi, z6])
            c_part = lft.zeros(6, nq)
            b_part = lft.zeros(6, nu_in)
            for f in forces:
                if f.body != name:
                    continue
                fcol = sp.as_lft(list(np.asarray(f.force, dtype=object).reshape(3)))
                fbar = rec.dcm.T @ fcol
                p = rec.body.port_position_lft(f.port)
                k_part = k_part - sp.tau_lft(-p).T @ lft.vstack(
                    [sp.skew_lft(fbar) @ rec.phi, z6]
                )
            for spec_key, col in input_cols.items():
                if spec_key[0] == "wrench" and spec_key[1] == name:
                    p = rec.body.port_position_lft(spec_key[2])
                    gain = sp.tau_lft(-p).T
                    sel = np.zeros((6, nu_in))
                    sel[:, col : col + 6] = np.eye(6)
                    b_part = b_part - gain @ lft.constant(sel)
            if (
                model.root.kind == "free"
                and rec.body is model.root_body
                and model.root_damping is not None
            ):
                c_part = c_part + lft.constant(model.root_damping) @ rec.jhat
            bun = _Bundle(m_part, c_part, k_part, b_part)
        for c in children.get(name, []):
            cb, cp = c.child_port
            child_bun = visit(cb)
            cpos = model.body(cb).port_position_lft(cp)
            tau_cp_t = sp.tau_lft(cpos).T
            s_bun = child_bun.map(lambda x: _reduce(tau_cp_t @ x))
            qpos = (
                lft.zeros(3, 1)
                if name == GROUND
                else model.body(name).port_position_lft(c.parent_port[1])
            )
            tau_q_t = sp.tau_lft(-qpos).T
            if isinstance(c, RevoluteJoint):
                p_ab = revolute_dcm_lft(c)
                p2 = sp.p2_lft(p_ab)
                s_bar = eq.joint_load[c.name]
                jidx = ctx.joint_index[c.name]
                e_chi = np.zeros((1, nq))
                e_chi[0, k + jidx] = 1.0
                e_nu = np.zeros((1, nq))
                e_nu[0, k + jidx] = 1.0
                rskew = lft.constant(
                    np.block(
                        [
                            [sp.skew(c.axis), np.zeros((3, 3))],
                            [np.zeros((3, 3)), sp.skew(c.axis)],
                        ]
                    )
                )
                stiff = (p2 @ rskew @ s_bar) @ lft.constant(e_chi)
                add = _Bundle(
                    tau_q_t @ (p2 @ s_bun.m),
                    tau_q_t @ (p2 @ s_bun.c),
                    tau_q_t @ (p2 @ s_bun.k + stiff),
                    tau_q_t @ (p2 @ s_bun.b),
                )
                # joint torque-balance row
                r6t = lft.constant(c.r6.reshape(1, 6))
                parent_rec = ctx.geo[name]
                r_parent = c.axis_in_parent.reshape(1, 3)
                omega_rows = parent_rec.jhat.submatrix([3, 4, 5], list(range(nq)))
                shaft_m = lft.constant(c.shaft_inertia * e_nu) + lft.constant(
                    c.shaft_inertia * r_parent
                ) @ omega_rows
                row_m = shaft_m + r6t @ s_bun.m
                row_c = lft.constant(c.friction * e_nu) + r6t @ s_bun.c
                row_k = r6t @ s_bun.k
                row_b = r6t @ s_bun.b
                if ("torque", c.name) in input_cols:
                    e_u = np.zeros((1, nu_in))
                    e_u[0, input_cols[("torque", c.name)]] = 1.0
                    row_b = row_b - lft.constant(e_u)
                joint_rows[c.name] = _Bundle(
                    _reduce(row_m), _reduce(row_c), _reduce(row_k), _reduce(row_b)
                )
            else:
                p2 = sp.p2_lft(lft.constant(c.fixed_dcm))
                add = s_bun.map(lambda x: tau_q_t @ (p2 @ x))
            bun = bun + add
        return bun.map(_reduce)

    root_name = GROUND if model.root.kind == GROUND else model.root_body.name
    root_bun = visit(root_name)

    # system rows: masked root rows then joint rows in tree order
    rows_m, rows_c, rows_k, rows_b = [], [], [], []
    if model.root.kind == "free":
        sel = list(mask)
        allc = list(range(nq))
        rows_m.append(root_bun.m.submatrix(sel, allc))
        rows_c.append(root_bun.c.submatrix(sel, allc))
        rows_k.append(root_bun.k.submatrix(sel, allc))
        rows_b.append(root_bun.b.submatrix(sel, list(range(nu_in))))
    for c in ctx.order:
        if isinstance(c, RevoluteJoint):
            jb = joint_rows[c.name]
            rows_m.append(jb.m)
            rows_c.append(jb.c)
            rows_k.append(jb.k)
            rows_b.append(jb.b)
    m_sys = _reduce(lft.vstack(rows_m))
    c_sys = _reduce(lft.vstack(rows_c))
    k_sys = _reduce(lft.vstack(rows_k))
    b_sys = _reduce(lft.vstack(rows_b))
    if np.linalg.cond(m_sys.nominal) > 1e13:
        raise AssemblyError("singular generalized mass matrix")
    minv = m_sys.inv()

    # kinematics chi_dot = G nu
    g = np.zeros((nq, nq))
    if k:
        full = np.block(
            [
                [np.eye(3), np.zeros((3, 3))],
                [np.zeros((3, 3)), np.linalg.inv(ctx.gamma0)],
            ]
        )
        g[:k, :k] = full[np.ix_(list(mask), list(mask))]
    g[k:, k:] = np.eye(n)

    a = lft.block(
        [
            [-(minv @ c_sys), -(minv @ k_sys)],
            [lft.constant(g), lft.zeros(nq, nq)],
        ]
    )
    b = lft.vstack([-(minv @ b_sys), lft.zeros(nq, nu_in)])
    a = a.sorted_by_kind()
    b = b.sorted_by_kind()
    if reduce:
        a = _reduce(a)
        b = _reduce(b)
    a.check_wellposed()
    b.check_wellposed()

    state_names = _state_names(model, ctx)
    if model.outputs:
        idx = []
        for name in model.outputs:
            if name not in state_names:
                raise AssemblyError(f"unknown output state {name!r}")
            idx.append(state_names.index(name))
        cmat = np.eye(2 * nq)[idx, :]
        output_names = tuple(model.outputs)
    else:
        cmat = np.eye(2 * nq)
        output_names = state_names
    c_out = lft.constant(cmat)
    d_out = lft.zeros(cmat.shape[0], nu_in)

    params = model.parameters()
    return LinearLftModel(
        a=a,
        b=b,
        c=c_out,
        d=d_out,
        state_names=state_names,
        input_names=input_names,
        output_names=output_names,
        parameters=params,
        equilibrium=eq,
    )


def _state_names(model: MultibodyModel, ctx: GeometryContext) -> tuple:
    axes = ("vx", "vy", "vz", "wx", "wy", "wz")
    pose = ("x", "y", "z", "t1", "t2", "t3")
    joints = [c for c in ctx.order if isinstance(c, RevoluteJoint)]
    names: list[str] = []
    if model.root.kind == "free":
        root = model.root_body.name
        names += [f"{root}.{axes[i]}" for i in ctx.mask]
    names += [f"{c.name}.thetadot" for c in joints]
    if model.root.kind == "free":
        root = model.root_body.name
        names += [f"{root}.{pose[i]}" for i in ctx.mask]
    names += [f"{c.name}.theta" for c in joints]
    return tuple(names)


def assemble(model: MultibodyModel, reduce: bool = True) -> LinearLftModel:
    """Run the three assembly steps and return the LFT model."""
    ctx = step1_geometry(model)
    eq = step2_wrenches(model, ctx)
    return step3_linearize(model, eq, reduce=reduce)


# ---------------------------------------------------------------------------
# Sampling, modes, freezing
# ---------------------------------------------------------------------------


def sample_model(lm: LinearLftModel, point, strict: bool = False):
    """Numeric (A, B, C, D) of the LFT model at a parameter point."""
    mode = "error" if strict else "ignore"
    full = {name: p.nominal for name, p in lm.parameters.items()}
    full.update(point)
    return (
        lm.a.evaluate(full, out_of_bounds=mode),
        lm.b.evaluate(full, out_of_bounds=mode),
        lm.c.evaluate(full, out_of_bounds=mode),
        lm.d.evaluate(full, out_of_bounds=mode),
    )


def modes(a: np.ndarray) -> list:
    """(eigenvalue, frequency [Hz], damping ratio) sorted by |Im|."""
    out = []
    for lam in np.linalg.eigvals(np.asarray(a, dtype=float)):
        mag = abs(lam)
        zeta = 1.0 if mag == 0.0 else float(-lam.real / mag)
        out.append((complex(lam), mag / (2.0 * np.pi), zeta))
    out.sort(key=lambda t: (abs(t[0].imag), t[0].real))
    return out


def _freeze_scalar(v, point):
    return lft.as_expr(v).value(point)


def freeze_model(model: MultibodyModel, point) -> MultibodyModel:
    """Copy of the model with every parameter fixed at the given point."""
    full = {name: p.nominal for name, p in model.parameters().items()}
    full.update(point)
    bodies = []
    for b in model.bodies:
        bodies.append(
            RigidBody(
                name=b.name,
                mass=_freeze_scalar(b.mass, full),
                inertia_cog=[
                    [_freeze_scalar(b.inertia_cog[i, j], full) for j in range(3)]
                    for i in range(3)
                ],
                cog_offset=[_freeze_scalar(v, full) for v in b.cog_offset],
                ports=tuple(
                    (n, [_freeze_scalar(v, full) for v in pos])
                    for n, pos in b.ports
                ),
                dynamics_role=b.dynamics_role,
                dof_mask=b.dof_mask,
            )
        )
    conns = []
    for c in model.connections:
        if isinstance(c, RevoluteJoint):
            angle = c.angle_eq
            if isinstance(angle, lft.HalfTanParam):
                angle = angle.angle_of(full[angle.param.name])
            conns.append(
                RevoluteJoint(
                    name=c.name,
                    parent_port=c.parent_port,
                    child_port=c.child_port,
                    axis=c.axis,
                    angle_eq=float(angle),
                    zero_dcm=c.zero_dcm,
                    shaft_inertia=c.shaft_inertia,
                    friction=c.friction,
                )
            )
        else:
            conns.append(c)
    forces = tuple(
        ExternalForce(
            f.body,
            f.port,
            tuple(
                _freeze_scalar(v, full)
                for v in np.asarray(f.force, dtype=object).reshape(3)
            )
            if not f.balance_weight
            else f.force,
            f.balance_weight,
        )
        for f in model.external_forces
    )
    return MultibodyModel(
        name=model.name,
        bodies=tuple(bodies),
        connections=tuple(conns),
        acceleration=model.acceleration,
        root=model.root,
        external_forces=forces,
        root_damping=model.root_damping,
        inputs=model.inputs,
        outputs=model.outputs,
        accelerating_trim=model.accelerating_trim,
    )


def sample_point(parameters: dict, rng) -> dict:
    """Uniform random admissible parameter point."""
    return {
        name: float(rng.uniform(p.lower, p.upper))
        for name, p in parameters.items()
    }
