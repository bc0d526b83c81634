"""Scalar and matrix-valued linear fractional transformations (LFTs).

A parameter-dependent matrix G(p) is stored as a constant coefficient
matrix M = [[A, B], [C, D]] in feedback with a diagonal block of
normalized parameters Delta = diag(delta_1 I, delta_2 I, ...):

    G = A + B Delta (I - D Delta)^-1 C

Each physical parameter p is mapped internally to delta in [-1, 1] via
p = center + spread * delta with center = (lower + upper) / 2 and
spread = (upper - lower) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Param",
    "HalfTanParam",
    "Expr",
    "Const",
    "Ref",
    "LftMatrix",
    "LftError",
    "WellPosednessError",
    "EvaluationError",
    "as_expr",
    "lift_scalar",
    "lift_matrix",
    "sin_expr",
    "cos_expr",
    "constant",
    "eye",
    "zeros",
    "hstack",
    "vstack",
    "block",
    "blockdiag",
    "Wiring",
    "compose",
    "interconnect",
    "rotation_lft_half",
    "rotation_lft_quarter",
    "rotation_about_axis",
    "reduce_lft",
]

KINDS = ("uncertain", "varying", "design")


class LftError(Exception):
    pass


class WellPosednessError(LftError):
    pass


class EvaluationError(LftError):
    pass


# ---------------------------------------------------------------------------
# Parameters and rational expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    """A named scalar parameter with nominal value and bounds."""

    name: str
    nominal: float
    lower: float
    upper: float
    kind: str = "uncertain"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if not (self.lower <= self.nominal <= self.upper):
            raise ValueError(
                f"parameter {self.name!r}: need lower <= nominal <= upper, "
                f"got {self.lower}, {self.nominal}, {self.upper}"
            )

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def spread(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def normalize(self, value: float) -> float:
        if self.spread == 0.0:
            return 0.0
        return (value - self.center) / self.spread

    # arithmetic builds rational expression trees
    def __add__(self, other):
        return Ref(self) + other

    def __radd__(self, other):
        return other + Ref(self)

    def __sub__(self, other):
        return Ref(self) - other

    def __rsub__(self, other):
        return as_expr(other) - Ref(self)

    def __mul__(self, other):
        return Ref(self) * other

    def __rmul__(self, other):
        return as_expr(other) * Ref(self)

    def __truediv__(self, other):
        return Ref(self) / other

    def __rtruediv__(self, other):
        return as_expr(other) / Ref(self)

    def __neg__(self):
        return -Ref(self)

    def __pow__(self, n):
        return Ref(self) ** n


@dataclass(frozen=True)
class HalfTanParam:
    """A tangent-substitution angle parameter.

    ``param`` holds t = tan(theta/2) for variant "half" or
    t' = tan(theta/4) for variant "quarter"; the substitution makes
    rotation matrices rational in the parameter.
    """

    base_angle_name: str
    param: Param
    variant: str = "half"

    def __post_init__(self):
        if self.variant not in ("half", "quarter"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "quarter" and not (
            -1.0 < self.param.lower and self.param.upper < 1.0
        ):
            raise ValueError(
                "quarter-angle parameter must have range inside (-1, 1)"
            )

    @classmethod
    def from_angle(
        cls,
        name: str,
        nominal: float,
        lower: float,
        upper: float,
        kind: str = "varying",
        variant: str = "half",
        param_name: str | None = None,
    ) -> "HalfTanParam":
        """Build from an angle range in radians."""
        div = 2.0 if variant == "half" else 4.0
        p = Param(
            param_name or f"t_{name}",
            float(np.tan(nominal / div)),
            float(np.tan(lower / div)),
            float(np.tan(upper / div)),
            kind,
        )
        return cls(name, p, variant)

    def angle_of(self, t_value: float) -> float:
        div = 2.0 if self.variant == "half" else 4.0
        return div * float(np.arctan(t_value))

    def t_of(self, angle: float) -> float:
        div = 2.0 if self.variant == "half" else 4.0
        return float(np.tan(angle / div))

    @property
    def angle_nominal(self) -> float:
        return self.angle_of(self.param.nominal)


class Expr:
    """Rational expression over parameters: {+, -, *, /, integer powers}."""

    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expr(other), self)

    def __neg__(self):
        return BinOp("-", Const(0.0), self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are allowed in LFT expressions")
        return PowOp(self, n)

    def value(self, point: Mapping[str, float]) -> float:
        raise NotImplementedError

    def params(self) -> list[Param]:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    v: float

    def value(self, point):
        return float(self.v)

    def params(self):
        return []

    def __repr__(self):
        return repr(self.v)


@dataclass(frozen=True)
class Ref(Expr):
    p: Param

    def value(self, point):
        return float(point[self.p.name])

    def params(self):
        return [self.p]

    def __repr__(self):
        return self.p.name


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    a: Expr
    b: Expr

    def value(self, point):
        x, y = self.a.value(point), self.b.value(point)
        if self.op == "+":
            return x + y
        if self.op == "-":
            return x - y
        if self.op == "*":
            return x * y
        return x / y

    def params(self):
        seen, out = set(), []
        for p in self.a.params() + self.b.params():
            if p.name not in seen:
                seen.add(p.name)
                out.append(p)
        return out

    def __repr__(self):
        return f"({self.a!r} {self.op} {self.b!r})"


@dataclass(frozen=True)
class PowOp(Expr):
    a: Expr
    n: int

    def value(self, point):
        return self.a.value(point) ** self.n

    def params(self):
        return self.a.params()

    def __repr__(self):
        return f"({self.a!r})**{self.n}"


Scalar = Union[float, int, Param, Expr]


def as_expr(x: Scalar) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Param):
        return Ref(x)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Const(float(x))
    raise TypeError(f"cannot interpret {x!r} as a rational expression")


def sin_expr(t: HalfTanParam) -> Expr:
    """sin(theta) as a rational expression of the tangent parameter."""
    u = Ref(t.param)
    if t.variant == "half":
        return (2.0 * u) / (1.0 + u**2)
    return (4.0 * u * (1.0 - u**2)) / (1.0 + u**2) ** 2


def cos_expr(t: HalfTanParam) -> Expr:
    """cos(theta) as a rational expression of the tangent parameter."""
    u = Ref(t.param)
    if t.variant == "half":
        return (1.0 - u**2) / (1.0 + u**2)
    return ((1.0 + u**2) ** 2 - 8.0 * u**2) / (1.0 + u**2) ** 2


# ---------------------------------------------------------------------------
# LFT matrices
# ---------------------------------------------------------------------------


def _nominal_deltas(delta: tuple[Param, ...]) -> np.ndarray:
    return np.array([p.normalize(p.nominal) for p in delta])


class LftMatrix:
    """A rows x cols matrix-valued rational function of parameters."""

    __slots__ = ("m", "rows", "cols", "delta")

    def __init__(self, m: np.ndarray, rows: int, cols: int, delta: tuple[Param, ...]):
        m = np.asarray(m, dtype=float)
        d = len(delta)
        if m.shape != (rows + d, cols + d):
            raise ValueError(
                f"coefficient matrix shape {m.shape} inconsistent with "
                f"({rows}+{d}, {cols}+{d})"
            )
        self.m = m
        self.rows = rows
        self.cols = cols
        self.delta = tuple(delta)

    # -- structure ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def ndelta(self) -> int:
        return len(self.delta)

    @property
    def a(self) -> np.ndarray:
        return self.m[: self.rows, : self.cols]

    @property
    def b(self) -> np.ndarray:
        return self.m[: self.rows, self.cols :]

    @property
    def c(self) -> np.ndarray:
        return self.m[self.rows :, : self.cols]

    @property
    def d(self) -> np.ndarray:
        return self.m[self.rows :, self.cols :]

    @property
    def delta_structure(self) -> list[tuple[str, int]]:
        order: list[str] = []
        counts: dict[str, int] = {}
        for p in self.delta:
            if p.name not in counts:
                counts[p.name] = 0
                order.append(p.name)
            counts[p.name] += 1
        return [(n, counts[n]) for n in order]

    def occurrences(self, name: str) -> int:
        return sum(1 for p in self.delta if p.name == name)

    def params(self) -> list[Param]:
        seen, out = set(), []
        for p in self.delta:
            if p.name not in seen:
                seen.add(p.name)
                out.append(p)
        return out

    # -- evaluation --------------------------------------------------------

    def evaluate(
        self,
        point: Mapping[str, float] | None = None,
        out_of_bounds: str = "ignore",
    ) -> np.ndarray:
        """Numeric value at a parameter point (missing names -> error)."""
        point = dict(point or {})
        d = self.ndelta
        if d == 0:
            return self.a.copy()
        deltas = np.empty(d)
        tol = 1e-9
        for i, p in enumerate(self.delta):
            if p.name not in point:
                raise EvaluationError(f"parameter {p.name!r} missing from point")
            v = float(point[p.name])
            if out_of_bounds != "ignore" and not (
                p.lower - tol <= v <= p.upper + tol
            ):
                msg = (
                    f"parameter {p.name!r} value {v} outside "
                    f"[{p.lower}, {p.upper}]"
                )
                if out_of_bounds == "error":
                    raise EvaluationError(msg)
                import warnings

                warnings.warn(msg)
            deltas[i] = p.normalize(v)
        lhs = np.eye(d) - self.d * deltas[None, :]
        try:
            sol = np.linalg.solve(lhs, self.c)
        except np.linalg.LinAlgError as exc:
            raise EvaluationError(
                f"ill-posed LFT at requested point (cond ~ inf): {exc}"
            ) from exc
        cond = np.linalg.cond(lhs)
        if cond > 1e13:
            raise EvaluationError(
                f"ill-posed LFT at requested point (cond ~ {cond:.2e})"
            )
        return self.a + (self.b * deltas[None, :]) @ sol

    @property
    def nominal(self) -> np.ndarray:
        return self.evaluate({p.name: p.nominal for p in self.delta})

    def check_wellposed(self) -> None:
        d = self.ndelta
        if d == 0:
            return
        deltas = _nominal_deltas(self.delta)
        lhs = np.eye(d) - self.d * deltas[None, :]
        if np.linalg.cond(lhs) > 1e13:
            raise WellPosednessError(
                "LFT is ill-posed at the nominal parameter point"
            )

    # -- algebra -----------------------------------------------------------

    def _coerce(self, other) -> "LftMatrix":
        if isinstance(other, LftMatrix):
            return other
        return constant(other)

    def __add__(self, other) -> "LftMatrix":
        o = self._coerce(other)
        if self.shape != o.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {o.shape}")
        r, c = self.shape
        d1, d2 = self.ndelta, o.ndelta
        m = np.zeros((r + d1 + d2, c + d1 + d2))
        m[:r, :c] = self.a + o.a
        m[:r, c : c + d1] = self.b
        m[:r, c + d1 :] = o.b
        m[r : r + d1, :c] = self.c
        m[r + d1 :, :c] = o.c
        m[r : r + d1, c : c + d1] = self.d
        m[r + d1 :, c + d1 :] = o.d
        return LftMatrix(m, r, c, self.delta + o.delta)

    def __radd__(self, other):
        return self._coerce(other) + self

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __neg__(self) -> "LftMatrix":
        m = self.m.copy()
        m[: self.rows, :] = -m[: self.rows, :]
        return LftMatrix(m, self.rows, self.cols, self.delta)

    def scale(self, k: float) -> "LftMatrix":
        m = self.m.copy()
        m[: self.rows, :] = k * m[: self.rows, :]
        return LftMatrix(m, self.rows, self.cols, self.delta)

    def __mul__(self, k):
        if isinstance(k, (int, float, np.floating)):
            return self.scale(float(k))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other) -> "LftMatrix":
        o = self._coerce(other)
        if self.cols != o.rows:
            raise ValueError(f"inner dimensions {self.cols} vs {o.rows}")
        r, k, c = self.rows, self.cols, o.cols
        d1, d2 = self.ndelta, o.ndelta
        m = np.zeros((r + d1 + d2, c + d1 + d2))
        m[:r, :c] = self.a @ o.a
        m[:r, c : c + d1] = self.b
        m[:r, c + d1 :] = self.a @ o.b
        m[r : r + d1, :c] = self.c @ o.a
        m[r : r + d1, c : c + d1] = self.d
        m[r : r + d1, c + d1 :] = self.c @ o.b
        m[r + d1 :, :c] = o.c
        m[r + d1 :, c + d1 :] = o.d
        return LftMatrix(m, r, c, self.delta + o.delta)

    def __rmatmul__(self, other):
        return self._coerce(other) @ self

    @property
    def T(self) -> "LftMatrix":
        r, c = self.rows, self.cols
        d = self.ndelta
        m = np.zeros((c + d, r + d))
        m[:c, :r] = self.a.T
        m[:c, r:] = self.c.T
        m[c:, :r] = self.b.T
        m[c:, r:] = self.d.T
        return LftMatrix(m, c, r, self.delta)

    def inv(self) -> "LftMatrix":
        """Inverse of a square LFT matrix (requires invertible A block)."""
        if self.rows != self.cols:
            raise ValueError("inverse requires a square matrix")
        n, d = self.rows, self.ndelta
        try:
            ainv = np.linalg.inv(self.a)
        except np.linalg.LinAlgError as exc:
            raise WellPosednessError(
                "nominal coefficient block singular; LFT inverse undefined"
            ) from exc
        m = np.zeros((n + d, n + d))
        m[:n, :n] = ainv
        m[:n, n:] = -ainv @ self.b
        m[n:, :n] = self.c @ ainv
        m[n:, n:] = self.d - self.c @ ainv @ self.b
        out = LftMatrix(m, n, n, self.delta)
        out.check_wellposed()
        return out

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "LftMatrix":
        rows = list(rows)
        cols = list(cols)
        d = self.ndelta
        m = np.zeros((len(rows) + d, len(cols) + d))
        m[: len(rows), : len(cols)] = self.a[np.ix_(rows, cols)]
        m[: len(rows), len(cols) :] = self.b[rows, :]
        m[len(rows) :, : len(cols)] = self.c[:, cols]
        m[len(rows) :, len(cols) :] = self.d
        return LftMatrix(m, len(rows), len(cols), self.delta)

    def reorder_delta(self, perm: Sequence[int]) -> "LftMatrix":
        """Permute the Delta channels (perm maps new index -> old index)."""
        perm = list(perm)
        if sorted(perm) != list(range(self.ndelta)):
            raise ValueError("invalid permutation")
        r, c = self.rows, self.cols
        m = self.m.copy()
        bi = [c + i for i in perm]
        ri = [r + i for i in perm]
        m = m[:, [*range(c), *bi]][[*range(r), *ri], :]
        return LftMatrix(m, r, c, tuple(self.delta[i] for i in perm))

    def sorted_by_kind(self) -> "LftMatrix":
        """Group Delta channels as (uncertain, varying, design)."""
        order = {k: i for i, k in enumerate(KINDS)}
        perm = sorted(
            range(self.ndelta),
            key=lambda i: (order[self.delta[i].kind], self.delta[i].name, i),
        )
        return self.reorder_delta(perm)

    def __repr__(self):
        return (
            f"LftMatrix({self.rows}x{self.cols}, "
            f"delta={self.delta_structure})"
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "coefficients": [[float(v) for v in row] for row in self.m],
            "delta_structure": [
                {"param": n, "repetitions": k} for n, k in self.delta_structure
            ],
            "parameters": [
                {
                    "name": p.name,
                    "kind": p.kind,
                    "nominal": p.nominal,
                    "lower": p.lower,
                    "upper": p.upper,
                }
                for p in self.params()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LftMatrix":
        params = {
            q["name"]: Param(
                q["name"], q["nominal"], q["lower"], q["upper"], q["kind"]
            )
            for q in data["parameters"]
        }
        delta: list[Param] = []
        for entry in data["delta_structure"]:
            delta.extend([params[entry["param"]]] * entry["repetitions"])
        return cls(
            np.array(data["coefficients"], dtype=float),
            data["rows"],
            data["cols"],
            tuple(delta),
        )


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def constant(value) -> LftMatrix:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    return LftMatrix(arr, arr.shape[0], arr.shape[1], ())


def eye(n: int) -> LftMatrix:
    return constant(np.eye(n))


def zeros(rows: int, cols: int) -> LftMatrix:
    return constant(np.zeros((rows, cols)))


def from_param(p: Param) -> LftMatrix:
    """Lift a single parameter to a 1x1 LFT: p = center + spread * delta."""
    if p.spread == 0.0:
        return constant([[p.center]])
    m = np.array([[p.center, p.spread], [1.0, 0.0]])
    return LftMatrix(m, 1, 1, (p,))


def lift_scalar(expr: Scalar) -> LftMatrix:
    """Lift a rational expression to a 1x1 LFT matrix."""
    expr = as_expr(expr)
    if isinstance(expr, Const):
        return constant([[expr.v]])
    if isinstance(expr, Ref):
        return from_param(expr.p)
    if isinstance(expr, PowOp):
        base = lift_scalar(expr.a)
        n = expr.n
        if n == 0:
            return constant([[1.0]])
        inv = n < 0
        out = base
        for _ in range(abs(n) - 1):
            out = out @ base
        if inv:
            try:
                out = out.inv()
            except WellPosednessError as exc:
                raise WellPosednessError(
                    f"sub-expression {expr!r} vanishes at the nominal point"
                ) from exc
        return out
    assert isinstance(expr, BinOp)
    a = lift_scalar(expr.a)
    b = lift_scalar(expr.b)
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    if expr.op == "*":
        return a @ b
    try:
        binv = b.inv()
    except WellPosednessError as exc:
        raise WellPosednessError(
            f"denominator {expr.b!r} vanishes at the nominal point"
        ) from exc
    return a @ binv


def lift_matrix(entries: Sequence[Sequence[Scalar]]) -> LftMatrix:
    """Lift a nested list of scalars/expressions to a matrix LFT."""
    rows = [hstack([lift_scalar(e) for e in row]) for row in entries]
    return vstack(rows)


# ---------------------------------------------------------------------------
# Stacking
# ---------------------------------------------------------------------------


def hstack(blocks: Iterable[LftMatrix]) -> LftMatrix:
    blocks = [b if isinstance(b, LftMatrix) else constant(b) for b in blocks]
    r = blocks[0].rows
    if any(b.rows != r for b in blocks):
        raise ValueError("hstack: row counts differ")
    c = sum(b.cols for b in blocks)
    d = sum(b.ndelta for b in blocks)
    m = np.zeros((r + d, c + d))
    co = ro = 0
    for bmat in blocks:
        m[:r, co : co + bmat.cols] = bmat.a
        m[:r, c + ro : c + ro + bmat.ndelta] = bmat.b
        m[r + ro : r + ro + bmat.ndelta, co : co + bmat.cols] = bmat.c
        m[r + ro : r + ro + bmat.ndelta, c + ro : c + ro + bmat.ndelta] = bmat.d
        co += bmat.cols
        ro += bmat.ndelta
    delta = tuple(p for bmat in blocks for p in bmat.delta)
    return LftMatrix(m, r, c, delta)


def vstack(blocks: Iterable[LftMatrix]) -> LftMatrix:
    blocks = [b if isinstance(b, LftMatrix) else constant(b) for b in blocks]
    return hstack([b.T for b in blocks]).T


def block(rows: Sequence[Sequence[LftMatrix]]) -> LftMatrix:
    return vstack([hstack(row) for row in rows])


def blockdiag(blocks: Sequence[LftMatrix]) -> LftMatrix:
    blocks = [b if isinstance(b, LftMatrix) else constant(b) for b in blocks]
    r = sum(b.rows for b in blocks)
    c = sum(b.cols for b in blocks)
    rows = []
    ro = co = 0
    for bmat in blocks:
        row = [zeros(bmat.rows, co), bmat, zeros(bmat.rows, c - co - bmat.cols)]
        rows.append(hstack([x for x in row if x.cols > 0]))
        co += bmat.cols
        ro += bmat.rows
    return vstack(rows)


# ---------------------------------------------------------------------------
# Interconnection
# ---------------------------------------------------------------------------


@dataclass
class Wiring:
    """Port map for composing two LFT blocks.

    Inputs of the combined block-diagonal system receive
    ``u = E @ u_ext + F @ y`` where y stacks the outputs of both blocks;
    ``outputs`` selects the externally visible output rows.
    """

    connections: list[tuple[int, int, float]] = field(default_factory=list)
    external_inputs: list[tuple[int, int, float]] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)
    n_external: int = 0


def interconnect(
    g: LftMatrix, F: np.ndarray, E: np.ndarray, outputs: Sequence[int]
) -> LftMatrix:
    """Close the loop u = E u_ext + F y around y = g(u); select output rows."""
    F = np.asarray(F, dtype=float)
    E = np.asarray(E, dtype=float)
    r, c = g.rows, g.cols
    if F.shape != (c, r) or E.shape[0] != c:
        raise ValueError("wiring matrices have inconsistent dimensions")
    lhs = np.eye(r) - g.a @ F
    if np.linalg.cond(lhs) > 1e13:
        raise WellPosednessError("ill-posed interconnection (algebraic loop)")
    s = np.linalg.inv(lhs)
    a_new = s @ g.a @ E
    b_new = s @ g.b
    c_new = g.c @ E + g.c @ F @ a_new
    d_new = g.d + g.c @ F @ b_new
    n_ext = E.shape[1]
    d = g.ndelta
    m = np.zeros((r + d, n_ext + d))
    m[:r, :n_ext] = a_new
    m[:r, n_ext:] = b_new
    m[r:, :n_ext] = c_new
    m[r:, n_ext:] = d_new
    out = LftMatrix(m, r, n_ext, g.delta).submatrix(list(outputs), range(n_ext))
    out.check_wellposed()
    return out


def compose(a: LftMatrix, b: LftMatrix, wiring: Wiring) -> LftMatrix:
    """Interconnect two LFT blocks through a port map."""
    g = blockdiag([a, b])
    F = np.zeros((g.cols, g.rows))
    for out_idx, in_idx, gain in wiring.connections:
        F[in_idx, out_idx] += gain
    E = np.zeros((g.cols, wiring.n_external))
    for in_idx, ext_idx, gain in wiring.external_inputs:
        E[in_idx, ext_idx] += gain
    return interconnect(g, F, E, wiring.outputs)


def series(a: LftMatrix, b: LftMatrix) -> LftMatrix:
    """y = a(b(u))."""
    return a @ b


# ---------------------------------------------------------------------------
# Rotation LFTs
# ---------------------------------------------------------------------------

_J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotation_lft_half(t: HalfTanParam) -> LftMatrix:
    """2x2 rotation [[cos, -sin], [sin, cos]] with 2 occurrences of t.

    Realizes the Cayley form R = (I + tJ)(I - tJ)^-1 with J the unit
    skew matrix, which is exact for t = tan(theta/2).
    """
    if t.variant != "half":
        raise ValueError("rotation_lft_half requires a half-angle parameter")
    p = t.param
    if p.spread == 0.0:
        th = t.angle_nominal
        return constant(
            [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
        )
    # w = t z with t = center + spread * delta: absorb the affine map
    # into the coefficient matrix by splitting t z = center z + spread w.
    # y = u + 2 t J x, z = x, x = u + t J x  =>  use direct derivation:
    # y = u + 2w', z = J u + J w', w' = t z  (w' = t J x).
    # With x = (I - tJ)^-1 u: y = u + 2tJx. Channels z = x, w = delta z,
    # and t = c0 + s0 delta absorb the normalization affinely.
    c0, s0 = p.center, p.spread
    i2 = np.eye(2)
    zinv = np.linalg.inv(i2 - c0 * _J2)
    a = i2 + 2.0 * c0 * _J2 @ zinv
    b = 2.0 * s0 * (c0 * _J2 @ zinv @ _J2 + _J2)
    c = zinv
    d = s0 * zinv @ _J2
    m = np.block([[a, b], [c, d]])
    return LftMatrix(m, 2, 2, (p, p))


def rotation_lft_quarter(t_prime: HalfTanParam) -> LftMatrix:
    """2x2 rotation with 4 occurrences of t' = tan(theta/4)."""
    if t_prime.variant != "quarter":
        raise ValueError("rotation_lft_quarter requires a quarter-angle parameter")
    half = HalfTanParam(t_prime.base_angle_name, t_prime.param, "half")
    r_half = rotation_lft_half(half)
    return r_half @ r_half


def rotation_about_axis(axis: np.ndarray, t: HalfTanParam) -> LftMatrix:
    """3x3 rotation about a fixed unit axis, parameterized by t."""
    r = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(r) - 1.0) > 1e-12:
        raise ValueError("axis must have unit norm")
    # orthonormal basis (e1, e2, r) with e1 x e2 = r
    seed = np.array([1.0, 0.0, 0.0])
    if abs(r @ seed) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    e1 = seed - (seed @ r) * r
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(r, e1)
    q = np.column_stack([e1, e2, r])
    r2 = rotation_lft_half(t) if t.variant == "half" else rotation_lft_quarter(t)
    core = blockdiag([r2, eye(1)])
    return constant(q) @ core @ constant(q.T)


# ---------------------------------------------------------------------------
# Structural reduction
# ---------------------------------------------------------------------------

_REDUCE_TOL = 1e-12


def _drop_channels(m: LftMatrix, drop: list[int]) -> LftMatrix:
    keep = [i for i in range(m.ndelta) if i not in drop]
    sel_r = [*range(m.rows), *[m.rows + i for i in keep]]
    sel_c = [*range(m.cols), *[m.cols + i for i in keep]]
    return LftMatrix(
        m.m[np.ix_(sel_r, sel_c)],
        m.rows,
        m.cols,
        tuple(m.delta[i] for i in keep),
    )


def _compress_side(m: LftMatrix, name: str, side: str) -> tuple[LftMatrix, bool]:
    idx = [i for i, p in enumerate(m.delta) if p.name == name]
    if not idx:
        return m, False
    r, c = m.rows, m.cols
    big = m.m.copy()
    rows = [r + i for i in idx]
    cols = [c + i for i in idx]
    if side == "row":
        # rotate the repeated channels so trailing z-rows vanish; the
        # paired w-columns get the same orthogonal transform
        z = big[rows, :]
        u, _, _ = np.linalg.svd(z, full_matrices=True)
        big[rows, :] = u.T @ big[rows, :]
        big[:, cols] = big[:, cols] @ u
        drop = [i for i in idx if np.linalg.norm(big[r + i, :]) < _REDUCE_TOL]
    else:
        w = big[:, cols]
        _, _, vt = np.linalg.svd(w, full_matrices=True)
        big[:, cols] = big[:, cols] @ vt.T
        big[rows, :] = vt @ big[rows, :]
        drop = [i for i in idx if np.linalg.norm(big[:, c + i]) < _REDUCE_TOL]
    m = LftMatrix(big, r, c, m.delta)
    if not drop:
        return m, False
    return _drop_channels(m, drop), True


def reduce_lft(m: LftMatrix) -> LftMatrix:
    """Structural reduction: drop Delta channels with no coupling.

    Per parameter block, an orthogonal change of the repeated-scalar
    channels exposes rows/columns of the coupling blocks with norm below
    1e-12, which are removed. The result evaluates identically (up to
    round-off) with never-increasing occurrence counts.
    """
    changed = True
    while changed:
        changed = False
        for name in [p.name for p in m.params()]:
            for side in ("row", "col"):
                m, ch = _compress_side(m, name, side)
                changed = changed or ch
    return m
