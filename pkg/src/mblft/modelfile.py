"""Declarative model files.

A model file is a YAML document describing a tree of rigid bodies connected
by joints, plus the boundary conditions and I/O selection needed to run the
equilibrium and linearization pipeline.  The schema is strict: unknown keys
are rejected, every dimensioned quantity carries an explicit unit, and angles
must state ``deg`` or ``rad`` (there is no default).

Top-level sections::

    name:         model name (string)
    parameters:   named scalar parameters with kind/nominal/bounds/unit
    bodies:       rigid bodies (mass, inertia about CoG, CoG offset, ports)
    connections:  revolute joints and rigid connections, in tree order
    boundary:     frame acceleration, external forces, root damping
    root:         ground or free root, with optional pose
    io:           input channels and output state selection (optional)

Scalar ``value`` fields accept either a number or an arithmetic expression
string over the declared (non-angle) parameter names, e.g. ``"1.0 * l6"``.
Angle-valued parameters (``angle: true``) are carried internally as
tangent-substituted parameters and may only be referenced as joint angles.
"""
from __future__ import annotations

import ast
import math

import numpy as np
import yaml

from . import lft
from .assembly import ExternalForce, MultibodyModel, RootSpec
from .bodies import DynamicsRole, RigidBody
from .joints import DEFAULT_SHAFT_INERTIA, RevoluteJoint, RigidConnection

__all__ = ["ModelFileError", "load_model", "parse_model"]

_AXIS_NAMES = {"vx": 0, "vy": 1, "vz": 2, "wx": 3, "wy": 4, "wz": 5}

# expected unit strings per field (exact match); angles are handled apart
_UNITS = {
    "mass": ("kg",),
    "inertia": ("kg*m^2",),
    "length": ("m",),
    "acceleration": ("m/s^2",),
    "force": ("N",),
    "friction": ("N*m*s/rad",),
    "shaft_inertia": ("kg*m^2",),
    "root_damping": ("N*s/m,N*m*s/rad",),
    "linear_density": ("kg/m",),
    "dimensionless": ("1", "-"),
}
_ANGLE_UNITS = ("deg", "rad")


class ModelFileError(ValueError):
    """Schema or content error in a model file, with section/field context."""


class _Mark(dict):
    """A dict that remembers the source line of its YAML mapping node."""

    line = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Mark(loader.construct_pairs(node))
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def _where(ctx: str, node) -> str:
    line = getattr(node, "line", None)
    return f"{ctx} (line {line})" if line is not None else ctx


def _err(ctx, node, msg) -> ModelFileError:
    return ModelFileError(f"{_where(ctx, node)}: {msg}")


def _need_mapping(ctx, node):
    if not isinstance(node, dict):
        raise ModelFileError(f"{ctx}: expected a mapping, got {type(node).__name__}")
    return node


def _take(ctx, node, required=(), optional=()):
    """Validate the key set of a mapping and return it."""
    _need_mapping(ctx, node)
    allowed = set(required) | set(optional)
    unknown = [k for k in node if k not in allowed]
    if unknown:
        raise _err(ctx, node, f"unknown key(s) {sorted(map(str, unknown))!r}; "
                              f"allowed: {sorted(allowed)}")
    missing = [k for k in required if k not in node]
    if missing:
        raise _err(ctx, node, f"missing required key(s) {sorted(missing)!r}")
    return node


def _check_unit(ctx, node, field_kind: str):
    unit = node.get("unit")
    expected = _UNITS[field_kind]
    if unit is None:
        raise _err(ctx, node, f"missing mandatory 'unit' (expected one of {expected})")
    if unit not in expected:
        raise _err(ctx, node, f"unit {unit!r} not accepted here; expected one of {expected}")


def _angle_to_rad(ctx, node, value: float) -> float:
    unit = node.get("unit")
    if unit is None:
        raise _err(ctx, node, "angles require an explicit unit: 'deg' or 'rad'")
    if unit not in _ANGLE_UNITS:
        raise _err(ctx, node, f"angle unit must be 'deg' or 'rad', got {unit!r}")
    return math.radians(value) if unit == "deg" else float(value)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: None,  # handled specially (integer exponent only)
}


def _parse_expr(ctx: str, text: str, params: dict):
    """Parse an arithmetic expression over declared scalar parameters."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as e:
        raise ModelFileError(f"{ctx}: invalid expression {text!r}: {e.msg}") from None

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return lft.as_expr(float(node.value))
        if isinstance(node, ast.Name):
            if node.id not in params:
                raise ModelFileError(
                    f"{ctx}: unknown parameter {node.id!r} in expression {text!r}"
                )
            p = params[node.id]
            if isinstance(p, lft.HalfTanParam):
                raise ModelFileError(
                    f"{ctx}: angle parameter {node.id!r} may only be used as a "
                    "joint equilibrium angle, not inside expressions"
                )
            return lft.as_expr(p)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = walk(node.operand)
            return -inner if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            if isinstance(node.op, ast.Pow):
                if not (
                    isinstance(node.right, ast.Constant)
                    and isinstance(node.right.value, int)
                    and node.right.value >= 0
                ):
                    raise ModelFileError(
                        f"{ctx}: exponent must be a non-negative integer "
                        f"literal in {text!r}"
                    )
                return walk(node.left) ** node.right.value
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        raise ModelFileError(
            f"{ctx}: unsupported construct {type(node).__name__} in "
            f"expression {text!r} (use numbers, parameter names, + - * / **)"
        )

    return walk(tree)


def _scalar(ctx, value, params):
    """A number or expression string -> float | Expr."""
    if isinstance(value, bool):
        raise ModelFileError(f"{ctx}: expected a number or expression, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return _parse_expr(ctx, value, params)
    raise ModelFileError(
        f"{ctx}: expected a number or expression string, got {type(value).__name__}"
    )


def _vector3(ctx, value, params):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ModelFileError(f"{ctx}: expected a list of 3 entries")
    return tuple(_scalar(f"{ctx}[{i}]", v, params) for i, v in enumerate(value))


def _matrix33(ctx, value, params):
    """Full 3x3 (list of 3 rows) or diagonal (list of 3 scalars)."""
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ModelFileError(f"{ctx}: expected 3 rows or 3 diagonal entries")
    if all(isinstance(r, (list, tuple)) for r in value):
        rows = []
        for i, r in enumerate(value):
            if len(r) != 3:
                raise ModelFileError(f"{ctx}: row {i} must have 3 entries")
            rows.append([_scalar(f"{ctx}[{i}][{j}]", v, params) for j, v in enumerate(r)])
        return np.array(rows, dtype=object)
    diag = [_scalar(f"{ctx}[{i}]", v, params) for i, v in enumerate(value)]
    out = np.zeros((3, 3), dtype=object)
    for i in range(3):
        out[i, i] = diag[i]
    return out


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


def _parse_parameters(section) -> dict:
    params: dict = {}
    if section is None:
        return params
    _need_mapping("parameters", section)
    for name, spec in section.items():
        ctx = f"parameters.{name}"
        spec = _take(
            ctx, spec,
            required=("kind", "nominal", "lower", "upper", "unit"),
            optional=("angle",),
        )
        kind = spec["kind"]
        if kind not in lft.KINDS:
            raise _err(ctx, spec, f"kind must be one of {sorted(lft.KINDS)}, got {kind!r}")
        is_angle = spec.get("angle", False)
        if not isinstance(is_angle, bool):
            raise _err(ctx, spec, "'angle' must be a boolean")
        for key in ("nominal", "lower", "upper"):
            if not isinstance(spec[key], (int, float)) or isinstance(spec[key], bool):
                raise _err(ctx, spec, f"{key!r} must be a number")
        nominal, lower, upper = (float(spec[k]) for k in ("nominal", "lower", "upper"))
        try:
            if is_angle:
                nominal = _angle_to_rad(ctx, spec, nominal)
                lower = _angle_to_rad(ctx, spec, lower)
                upper = _angle_to_rad(ctx, spec, upper)
                params[name] = lft.HalfTanParam.from_angle(
                    str(name), nominal, lower, upper, kind=kind
                )
            else:
                # non-angle units are free-form (kg, m, ...) but mandatory
                if not isinstance(spec["unit"], str) or not spec["unit"]:
                    raise _err(ctx, spec, "'unit' must be a non-empty string")
                params[name] = lft.Param(str(name), nominal, lower, upper, kind=kind)
        except ValueError as e:
            raise _err(ctx, spec, str(e)) from None
    return params


def _parse_port_ref(ctx, text) -> tuple:
    if not isinstance(text, str) or text.count(".") != 1:
        raise ModelFileError(f"{ctx}: expected 'body.port', got {text!r}")
    body, port = text.split(".")
    return body, port


def _parse_bodies(section, params) -> tuple:
    if not isinstance(section, list) or not section:
        raise ModelFileError("bodies: expected a non-empty list")
    bodies = []
    for entry in section:
        ctx = "bodies[?]"
        _need_mapping(ctx, entry)
        name = entry.get("name", "?")
        ctx = f"bodies.{name}"
        entry = _take(
            ctx, entry,
            required=("name", "role", "mass", "inertia", "cog"),
            optional=("ports", "dof_mask"),
        )
        role = entry["role"]
        if role not in ("forward", "inverse"):
            raise _err(ctx, entry, f"role must be 'forward' or 'inverse', got {role!r}")

        mass_node = _take(f"{ctx}.mass", entry["mass"], required=("value", "unit"))
        _check_unit(f"{ctx}.mass", mass_node, "mass")
        mass = _scalar(f"{ctx}.mass.value", mass_node["value"], params)

        in_node = _take(f"{ctx}.inertia", entry["inertia"], required=("value", "unit"))
        _check_unit(f"{ctx}.inertia", in_node, "inertia")
        inertia = _matrix33(f"{ctx}.inertia.value", in_node["value"], params)

        cog_node = _take(f"{ctx}.cog", entry["cog"], required=("value", "unit"))
        _check_unit(f"{ctx}.cog", cog_node, "length")
        cog = _vector3(f"{ctx}.cog.value", cog_node["value"], params)

        ports = []
        ports_node = entry.get("ports") or {}
        _need_mapping(f"{ctx}.ports", ports_node)
        for pname, pnode in ports_node.items():
            pctx = f"{ctx}.ports.{pname}"
            pnode = _take(pctx, pnode, required=("value", "unit"))
            _check_unit(pctx, pnode, "length")
            ports.append((str(pname), _vector3(f"{pctx}.value", pnode["value"], params)))

        mask = entry.get("dof_mask")
        if mask is None:
            dof_mask = tuple(range(6))
        else:
            if not isinstance(mask, list) or not mask:
                raise _err(ctx, entry, "dof_mask must be a non-empty list")
            dof_mask = []
            for m in mask:
                if isinstance(m, str) and m in _AXIS_NAMES:
                    dof_mask.append(_AXIS_NAMES[m])
                elif isinstance(m, int) and 0 <= m <= 5 and not isinstance(m, bool):
                    dof_mask.append(m)
                else:
                    raise _err(
                        ctx, entry,
                        f"dof_mask entries must be 0..5 or one of "
                        f"{sorted(_AXIS_NAMES)}, got {m!r}",
                    )
            dof_mask = tuple(sorted(set(dof_mask)))

        try:
            bodies.append(
                RigidBody(
                    name=str(entry["name"]),
                    mass=mass,
                    inertia_cog=inertia,
                    cog_offset=cog,
                    ports=tuple(ports),
                    dynamics_role=(
                        DynamicsRole.FORWARD if role == "forward" else DynamicsRole.INVERSE
                    ),
                    dof_mask=dof_mask,
                )
            )
        except ValueError as e:
            raise _err(ctx, entry, str(e)) from None
    return tuple(bodies)


def _parse_connections(section, params) -> tuple:
    if not isinstance(section, list) or not section:
        raise ModelFileError("connections: expected a non-empty list")
    conns = []
    for entry in section:
        _need_mapping("connections[?]", entry)
        name = entry.get("name", "?")
        ctx = f"connections.{name}"
        ctype = entry.get("type")
        if ctype == "rigid":
            entry = _take(ctx, entry, required=("type", "name", "parent", "child"),
                          optional=("orientation",))
            dcm = None
            if "orientation" in entry:
                onode = _take(f"{ctx}.orientation", entry["orientation"],
                              required=("dcm",))
                dcm = np.array(onode["dcm"], dtype=float)
            try:
                conns.append(
                    RigidConnection(
                        name=str(entry["name"]),
                        parent_port=_parse_port_ref(f"{ctx}.parent", entry["parent"]),
                        child_port=_parse_port_ref(f"{ctx}.child", entry["child"]),
                        fixed_dcm=dcm,
                    )
                )
            except ValueError as e:
                raise _err(ctx, entry, str(e)) from None
        elif ctype == "revolute":
            entry = _take(
                ctx, entry,
                required=("type", "name", "parent", "child", "axis", "angle"),
                optional=("shaft_inertia", "friction"),
            )
            axis = entry["axis"]
            if not isinstance(axis, list) or len(axis) != 3:
                raise _err(ctx, entry, "axis must be a list of 3 numbers")

            anode = entry["angle"]
            if isinstance(anode, str):
                # reference to a declared angle parameter
                if anode not in params or not isinstance(params[anode], lft.HalfTanParam):
                    raise _err(
                        ctx, entry,
                        f"angle {anode!r} must name a parameter declared with "
                        "'angle: true'",
                    )
                angle_eq = params[anode]
            else:
                anode = _take(f"{ctx}.angle", anode, required=("value", "unit"))
                if not isinstance(anode["value"], (int, float)):
                    raise _err(ctx, anode, "angle value must be a number")
                angle_eq = _angle_to_rad(f"{ctx}.angle", anode, float(anode["value"]))

            shaft = DEFAULT_SHAFT_INERTIA
            if "shaft_inertia" in entry:
                snode = _take(f"{ctx}.shaft_inertia", entry["shaft_inertia"],
                              required=("value", "unit"))
                _check_unit(f"{ctx}.shaft_inertia", snode, "shaft_inertia")
                shaft = float(snode["value"])
            friction = 0.0
            if "friction" in entry:
                fnode = _take(f"{ctx}.friction", entry["friction"],
                              required=("value", "unit"))
                _check_unit(f"{ctx}.friction", fnode, "friction")
                friction = float(fnode["value"])
            try:
                conns.append(
                    RevoluteJoint(
                        name=str(entry["name"]),
                        parent_port=_parse_port_ref(f"{ctx}.parent", entry["parent"]),
                        child_port=_parse_port_ref(f"{ctx}.child", entry["child"]),
                        axis=[float(v) for v in axis],
                        angle_eq=angle_eq,
                        shaft_inertia=shaft,
                        friction=friction,
                    )
                )
            except ValueError as e:
                raise _err(ctx, entry, str(e)) from None
        else:
            raise _err(ctx, entry, f"type must be 'revolute' or 'rigid', got {ctype!r}")
    return tuple(conns)


def _parse_boundary(section, params):
    ctx = "boundary"
    section = _take(ctx, section, required=("acceleration",),
                    optional=("forces", "root_damping"))
    anode = _take(f"{ctx}.acceleration", section["acceleration"],
                  required=("value", "unit"))
    _check_unit(f"{ctx}.acceleration", anode, "acceleration")
    accel = _vector3(f"{ctx}.acceleration.value", anode["value"], params)

    forces = []
    for i, fnode in enumerate(section.get("forces") or []):
        fctx = f"{ctx}.forces[{i}]"
        fnode = _take(fctx, fnode, required=("body", "port"),
                      optional=("value", "unit", "balance_weight"))
        balance = fnode.get("balance_weight", False)
        if not isinstance(balance, bool):
            raise _err(fctx, fnode, "'balance_weight' must be a boolean")
        if balance:
            if "value" in fnode:
                raise _err(fctx, fnode, "'balance_weight' excludes an explicit value")
            force = (0.0, 0.0, 0.0)
        else:
            if "value" not in fnode:
                raise _err(fctx, fnode, "a force needs 'value' or 'balance_weight: true'")
            _check_unit(fctx, fnode, "force")
            force = _vector3(f"{fctx}.value", fnode["value"], params)
        forces.append(
            ExternalForce(
                body=str(fnode["body"]), port=str(fnode["port"]),
                force=force, balance_weight=balance,
            )
        )

    damping = None
    if "root_damping" in section:
        dctx = f"{ctx}.root_damping"
        dnode = _take(dctx, section["root_damping"], required=("diag", "unit"))
        _check_unit(dctx, dnode, "root_damping")
        diag = dnode["diag"]
        if not isinstance(diag, list) or len(diag) != 6:
            raise _err(dctx, dnode, "diag must be a list of 6 numbers")
        damping = np.diag([float(v) for v in diag])
    return accel, tuple(forces), damping


def _parse_root(section):
    if section is None:
        return RootSpec(kind="ground"), False
    ctx = "root"
    section = _take(ctx, section, required=("kind",),
                    optional=("euler", "position", "accelerating_trim"))
    kind = section["kind"]
    if kind not in ("ground", "free"):
        raise _err(ctx, section, f"kind must be 'ground' or 'free', got {kind!r}")
    euler = (0.0, 0.0, 0.0)
    if "euler" in section:
        enode = _take(f"{ctx}.euler", section["euler"], required=("value", "unit"))
        v = enode["value"]
        if not isinstance(v, list) or len(v) != 3:
            raise _err(f"{ctx}.euler", enode, "value must be a list of 3 angles")
        euler = tuple(_angle_to_rad(f"{ctx}.euler", enode, float(x)) for x in v)
    position = (0.0, 0.0, 0.0)
    if "position" in section:
        pnode = _take(f"{ctx}.position", section["position"], required=("value", "unit"))
        _check_unit(f"{ctx}.position", pnode, "length")
        v = pnode["value"]
        if not isinstance(v, list) or len(v) != 3:
            raise _err(f"{ctx}.position", pnode, "value must be a list of 3 numbers")
        position = tuple(float(x) for x in v)
    trim = section.get("accelerating_trim", False)
    if not isinstance(trim, bool):
        raise _err(ctx, section, "'accelerating_trim' must be a boolean")
    return RootSpec(kind=kind, euler=euler, position=position), trim


def _parse_io(section) -> tuple:
    if section is None:
        return (), ()
    ctx = "io"
    section = _take(ctx, section, optional=("inputs", "outputs"))
    inputs = []
    for i, node in enumerate(section.get("inputs") or []):
        ictx = f"{ctx}.inputs[{i}]"
        node = _take(ictx, node, optional=("torque", "wrench"))
        if ("torque" in node) == ("wrench" in node):
            raise _err(ictx, node, "each input is either 'torque: <joint>' or "
                                   "'wrench: <body.port>'")
        if "torque" in node:
            inputs.append(("torque", str(node["torque"])))
        else:
            body, port = _parse_port_ref(ictx, node["wrench"])
            inputs.append(("wrench", body, port))
    outputs = section.get("outputs") or []
    if not isinstance(outputs, list):
        raise ModelFileError(f"{ctx}.outputs: expected a list of state names")
    return tuple(inputs), tuple(str(s) for s in outputs)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_model(doc) -> MultibodyModel:
    """Build a MultibodyModel from a parsed YAML document."""
    doc = _take(
        "model", doc,
        required=("name", "bodies", "connections", "boundary"),
        optional=("parameters", "root", "io"),
    )
    if not isinstance(doc["name"], str):
        raise ModelFileError("model.name must be a string")
    params = _parse_parameters(doc.get("parameters"))
    bodies = _parse_bodies(doc["bodies"], params)
    conns = _parse_connections(doc["connections"], params)
    accel, forces, damping = _parse_boundary(doc["boundary"], params)
    root, trim = _parse_root(doc.get("root"))
    inputs, outputs = _parse_io(doc.get("io"))
    try:
        return MultibodyModel(
            name=doc["name"],
            bodies=bodies,
            connections=conns,
            acceleration=accel,
            root=root,
            external_forces=forces,
            root_damping=damping,
            inputs=inputs,
            outputs=outputs,
            accelerating_trim=trim,
        )
    except ValueError as e:
        raise ModelFileError(f"model: {e}") from None


def load_model(path) -> MultibodyModel:
    """Load and validate a model file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.load(fh, Loader=_Loader)
        except yaml.YAMLError as e:
            raise ModelFileError(f"{path}: not valid YAML: {e}") from None
    if doc is None:
        raise ModelFileError(f"{path}: empty file")
    return parse_model(doc)
