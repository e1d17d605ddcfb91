"""Unit cost functions as CES expression trees.

A cost function q maps a positive technology/price vector to the unit cost of
production. The family implemented here is the nested constant-elasticity
class: a tree whose leaves are input axes and whose internal nodes are CES
aggregators

    node(v_1, ..., v_k) = C * (a_1 v_1^alpha + ... + a_k v_k^alpha)^(1/alpha)

with alpha in (0, 1], C > 0, positive weights summing to one. Every member is
positive, degree-1 homogeneous, C^1, and has bounded level sets on the open
positive orthant, which is exactly what the transform theory downstream needs.
The alpha -> 0 and alpha -> -inf limits (Cobb-Douglas, Leontief) violate the
bounded-level-set requirement and are rejected at construction.

Expressions have a structured text form used by configs and the CLI:

    (ces :alpha 0.5 :C 1.0 :a (0.5 0.5) (axis 1) (axis 2))

Axis indices are 1-based and must form a permutation of 1..n across the tree.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    CostParseError,
    DegenerateProductionError,
    DimensionMismatchError,
    DomainError,
)

__all__ = [
    "Axis",
    "CES",
    "CostExpr",
    "axis_indices",
    "dimension",
    "eval_cost",
    "eval_cost_axes",
    "grad_cost",
    "parse_cost",
    "format_cost",
    "cost_hash",
    "validate_cost",
    "CostValidation",
    "CESProduction",
    "LeontiefProduction",
    "LinearProduction",
    "ProductionSpec",
    "cost_from_production",
]

# Below this exponent the direct power-sum evaluation risks under/overflow,
# so CES nodes switch to a log-sum-exp form.
_LOGSPACE_ALPHA = 0.05

_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Axis:
    """Leaf node: the input variable with the given 1-based index."""

    index: int

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 1:
            raise DomainError(f"axis index must be a positive integer, got {self.index!r}")


@dataclass(frozen=True)
class CES:
    """CES aggregator node over axes and/or sub-expressions."""

    alpha: float
    C: float
    a: tuple
    children: tuple

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(
                f"alpha must lie in (0, 1] (bounded level sets), got {self.alpha}"
            )
        if not (self.C > 0.0):
            raise DomainError(f"C must be positive, got {self.C}")
        object.__setattr__(self, "a", tuple(float(w) for w in self.a))
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise DomainError("a CES node needs at least two children")
        if len(self.a) != len(self.children):
            raise DimensionMismatchError(
                f"{len(self.a)} weights for {len(self.children)} children"
            )
        if any(w <= 0.0 for w in self.a):
            raise DomainError("CES weights must all be positive")
        if abs(sum(self.a) - 1.0) > _WEIGHT_SUM_TOL:
            raise DomainError(f"CES weights must sum to 1, got {sum(self.a)!r}")
        seen = axis_indices(self)
        if len(seen) != len(set(seen)):
            raise DimensionMismatchError("an axis index appears more than once in the tree")


CostExpr = Union[Axis, CES]


def axis_indices(expr: CostExpr) -> tuple:
    """All axis indices appearing in the tree, in leaf order."""
    if isinstance(expr, Axis):
        return (expr.index,)
    out = []
    for child in expr.children:
        out.extend(axis_indices(child))
    return tuple(out)


def dimension(expr: CostExpr) -> int:
    """Input dimension n; requires the axes to be a permutation of 1..n."""
    idx = sorted(axis_indices(expr))
    n = len(idx)
    if idx != list(range(1, n + 1)):
        raise DimensionMismatchError(
            f"axis indices must form a permutation of 1..n, got {idx}"
        )
    return n


def _eval_node(expr: CostExpr, axes) -> np.ndarray:
    if isinstance(expr, Axis):
        return axes[expr.index - 1]
    vals = [_eval_node(child, axes) for child in expr.children]
    if expr.alpha >= _LOGSPACE_ALPHA:
        acc = expr.a[0] * vals[0] ** expr.alpha
        for w, v in zip(expr.a[1:], vals[1:]):
            acc = acc + w * v ** expr.alpha
        return expr.C * acc ** (1.0 / expr.alpha)
    # log-sum-exp route for tiny alpha
    logs = [np.log(a) + expr.alpha * np.log(v) for a, v in zip(expr.a, vals)]
    m = logs[0]
    for term in logs[1:]:
        m = np.maximum(m, term)
    acc = sum(np.exp(term - m) for term in logs)
    return expr.C * np.exp((m + np.log(acc)) / expr.alpha)


def eval_cost_axes(expr: CostExpr, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate q on per-axis coordinate arrays (broadcast against each other).

    Useful for tensor grids: pass axis i as an array shaped to broadcast
    (e.g. a column and a row for n=2) and get the full field in one call.
    """
    n = dimension(expr)
    if len(axes) != n:
        raise DimensionMismatchError(f"expected {n} axis arrays, got {len(axes)}")
    axes = [np.asarray(v, dtype=np.float64) for v in axes]
    for v in axes:
        if np.any(v <= 0.0):
            raise DomainError("cost functions are defined on the open positive orthant")
    return _eval_node(expr, axes)


def eval_cost(expr: CostExpr, x) -> np.ndarray:
    """Evaluate q at points x of shape (..., n). Returns shape (...)."""
    n = dimension(expr)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (n,):
        raise DimensionMismatchError(f"expected trailing dimension {n}, got shape {x.shape}")
    if np.any(x <= 0.0):
        raise DomainError("cost functions are defined on the open positive orthant")
    value = _eval_node(expr, [x[..., i] for i in range(n)])
    return value if value.ndim else float(value)


def _eval_grad_node(expr: CostExpr, axes):
    if isinstance(expr, Axis):
        val = axes[expr.index - 1]
        return val, {expr.index: np.ones_like(val)}
    parts = [_eval_grad_node(child, axes) for child in expr.children]
    vals = [p[0] for p in parts]
    if expr.alpha >= _LOGSPACE_ALPHA:
        acc = expr.a[0] * vals[0] ** expr.alpha
        for w, v in zip(expr.a[1:], vals[1:]):
            acc = acc + w * v ** expr.alpha
        node = expr.C * acc ** (1.0 / expr.alpha)
    else:
        logs = [np.log(a) + expr.alpha * np.log(v) for a, v in zip(expr.a, vals)]
        m = logs[0]
        for term in logs[1:]:
            m = np.maximum(m, term)
        node = expr.C * np.exp((m + np.log(sum(np.exp(t - m) for t in logs))) / expr.alpha)
    grads: dict = {}
    # d node / d v_j = C^alpha * node^(1-alpha) * a_j * v_j^(alpha-1)
    outer = expr.C ** expr.alpha * node ** (1.0 - expr.alpha)
    for (v, (_, child_grad)), w in zip(zip(vals, parts), expr.a):
        scale = outer * w * v ** (expr.alpha - 1.0)
        for idx, g in child_grad.items():
            grads[idx] = scale * g
    return node, grads


def grad_cost(expr: CostExpr, x) -> np.ndarray:
    """Gradient of q at points x of shape (..., n); satisfies x . grad = q."""
    n = dimension(expr)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (n,):
        raise DimensionMismatchError(f"expected trailing dimension {n}, got shape {x.shape}")
    if np.any(x <= 0.0):
        raise DomainError("cost functions are defined on the open positive orthant")
    _, grads = _eval_grad_node(expr, [x[..., i] for i in range(n)])
    out = np.stack([np.broadcast_to(grads[i + 1], x.shape[:-1]) for i in range(n)], axis=-1)
    return out


# ---------------------------------------------------------------------------
# text form


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch in "()":
            tokens.append((ch, line, col))
            col += 1
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        else:
            j = i
            start_col = col
            while j < len(text) and text[j] not in " \t\r\n();":
                j += 1
                col += 1
            tokens.append((text[i:j], line, start_col))
            i = j
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, what="token"):
        tok = self.peek()
        if tok is None:
            raise CostParseError(f"unexpected end of input, expected {what}")
        self.pos += 1
        return tok

    def expect(self, literal):
        tok = self.next(repr(literal))
        if tok[0] != literal:
            raise CostParseError(f"expected {literal!r}, got {tok[0]!r}", tok[1], tok[2])
        return tok


def _parse_number(stream, what):
    tok = stream.next(what)
    try:
        return float(tok[0]), tok
    except ValueError:
        raise CostParseError(f"expected a number for {what}, got {tok[0]!r}", tok[1], tok[2])


def _parse_expr(stream) -> CostExpr:
    open_tok = stream.expect("(")
    head = stream.next("'ces' or 'axis'")
    if head[0] == "axis":
        tok = stream.next("axis index")
        try:
            idx = int(tok[0])
        except ValueError:
            raise CostParseError(f"axis index must be an integer, got {tok[0]!r}", tok[1], tok[2])
        stream.expect(")")
        if idx < 1:
            raise CostParseError("axis indices are 1-based", tok[1], tok[2])
        return Axis(idx)
    if head[0] != "ces":
        raise CostParseError(f"unknown node kind {head[0]!r}", head[1], head[2])

    alpha = C = None
    weights = None
    while True:
        tok = stream.peek()
        if tok is None:
            raise CostParseError("unterminated (ces ...) form", open_tok[1], open_tok[2])
        if not tok[0].startswith(":"):
            break
        key = stream.next()[0]
        if key == ":alpha":
            alpha, vtok = _parse_number(stream, ":alpha")
            if not (0.0 < alpha <= 1.0):
                raise CostParseError(
                    f"alpha must lie in (0, 1] (bounded level sets), got {alpha}",
                    vtok[1],
                    vtok[2],
                )
        elif key == ":C":
            C, vtok = _parse_number(stream, ":C")
            if C <= 0.0:
                raise CostParseError(f"C must be positive, got {C}", vtok[1], vtok[2])
        elif key == ":a":
            stream.expect("(")
            weights = []
            while True:
                tok = stream.peek()
                if tok is None:
                    raise CostParseError("unterminated weight list")
                if tok[0] == ")":
                    stream.next()
                    break
                w, vtok = _parse_number(stream, "weight")
                if w <= 0.0:
                    raise CostParseError(f"weights must be positive, got {w}", vtok[1], vtok[2])
                weights.append(w)
        else:
            raise CostParseError(f"unknown keyword {key!r}", tok[1], tok[2])

    if alpha is None or C is None or weights is None:
        raise CostParseError(
            "a (ces ...) form needs :alpha, :C and :a", open_tok[1], open_tok[2]
        )
    children = []
    while True:
        tok = stream.peek()
        if tok is None:
            raise CostParseError("unterminated (ces ...) form", open_tok[1], open_tok[2])
        if tok[0] == ")":
            stream.next()
            break
        children.append(_parse_expr(stream))
    if len(children) != len(weights):
        raise CostParseError(
            f"{len(weights)} weights but {len(children)} children",
            open_tok[1],
            open_tok[2],
        )
    if abs(sum(weights) - 1.0) > _WEIGHT_SUM_TOL:
        raise CostParseError(
            f"weights must sum to 1, got {sum(weights)!r}", open_tok[1], open_tok[2]
        )
    try:
        return CES(alpha=alpha, C=C, a=tuple(weights), children=tuple(children))
    except (DomainError, DimensionMismatchError) as exc:
        raise CostParseError(str(exc), open_tok[1], open_tok[2])


def parse_cost(text: str) -> CostExpr:
    """Parse the structured text form; errors carry line/column positions."""
    stream = _TokenStream(_tokenize(text))
    expr = _parse_expr(stream)
    tok = stream.peek()
    if tok is not None:
        raise CostParseError(f"trailing input {tok[0]!r}", tok[1], tok[2])
    dimension(expr)
    return expr


def format_cost(expr: CostExpr) -> str:
    """Canonical text form; round-trips through parse_cost."""
    if isinstance(expr, Axis):
        return f"(axis {expr.index})"
    weights = " ".join(repr(w) for w in expr.a)
    children = " ".join(format_cost(c) for c in expr.children)
    return f"(ces :alpha {expr.alpha!r} :C {expr.C!r} :a ({weights}) {children})"


def cost_hash(expr: CostExpr) -> str:
    """Stable identifier of the expression (sha256 of the canonical text)."""
    return hashlib.sha256(format_cost(expr).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class CostValidation:
    homogeneity_max_residual: float
    positivity_ok: bool
    level_set_bounded: bool
    analytic_family: bool

    @property
    def ok(self) -> bool:
        return (
            self.positivity_ok
            and self.level_set_bounded
            and self.homogeneity_max_residual <= 1e-8
        )


def validate_cost(q, sample_count: int = 64, n: int | None = None) -> CostValidation:
    """Check homogeneity, positivity, and bounded level sets.

    `q` is a CostExpr (bounded level sets then hold analytically and the
    report says so) or any callable on (..., n) arrays, probed numerically.
    Callables must be given `n` explicitly.
    """
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1")
    if isinstance(q, (Axis, CES)):
        nn = dimension(q)
        fn: Callable = lambda pts: eval_cost(q, pts)
        analytic = True
    else:
        if n is None:
            raise DimensionMismatchError("callable cost functions need an explicit n")
        nn = n
        fn = q
        analytic = False

    rng = np.random.default_rng(1729)
    x = np.exp(rng.uniform(-2.0, 2.0, size=(sample_count, nn)))
    lam = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=sample_count))
    qx = np.asarray(fn(x), dtype=np.float64)
    qlx = np.asarray(fn(lam[:, None] * x), dtype=np.float64)
    positivity = bool(np.all(qx > 0.0) and np.all(np.isfinite(qx)))
    residual = float(np.max(np.abs(qlx - lam * qx) / (lam * np.abs(qx))))

    # Ray probe: along each axis send x_i -> infinity with the others pinned
    # at 1 and require growth. A cost with bounded level sets must blow up
    # along every such ray.
    bounded = True
    t = np.logspace(0.0, 6.0, 7)
    for i in range(nn):
        pts = np.ones((t.size, nn))
        pts[:, i] = t
        vals = np.asarray(fn(pts), dtype=np.float64)
        if not np.all(np.isfinite(vals)) or vals[-1] < 1e2 * max(vals[0], 1e-300):
            bounded = False
    if analytic:
        bounded = True  # alpha in (0,1] with positive weights guarantees it

    return CostValidation(
        homogeneity_max_residual=residual,
        positivity_ok=positivity,
        level_set_bounded=bounded,
        analytic_family=analytic,
    )


# ---------------------------------------------------------------------------
# production functions and duality


@dataclass(frozen=True)
class CESProduction:
    """F(y) = (sum_j b_j y_j^rho)^(1/rho), rho <= 1, rho != 0."""

    rho: float
    b: tuple

    def __post_init__(self):
        if self.rho == 0.0 or self.rho > 1.0:
            raise DegenerateProductionError(
                f"CES production needs rho <= 1, rho != 0, got {self.rho}"
            )
        object.__setattr__(self, "b", tuple(float(w) for w in self.b))
        if len(self.b) < 2 or any(w <= 0.0 for w in self.b):
            raise DegenerateProductionError("weights must be positive, dimension >= 2")

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        b = np.asarray(self.b)
        with np.errstate(divide="ignore", over="ignore"):
            s = np.sum(b * y ** self.rho, axis=-1)
            out = s ** (1.0 / self.rho)
        if self.rho < 0.0:
            out = np.where(np.any(y <= 0.0, axis=-1), 0.0, out)
        return out


@dataclass(frozen=True)
class LeontiefProduction:
    """F(y) = min_j y_j / b_j (fixed proportions)."""

    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(w) for w in self.b))
        if len(self.b) < 2 or any(w <= 0.0 for w in self.b):
            raise DegenerateProductionError("weights must be positive, dimension >= 2")

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.min(y / np.asarray(self.b), axis=-1)


@dataclass(frozen=True)
class LinearProduction:
    """F(y) = sum_j b_j y_j (perfect substitutes)."""

    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(w) for w in self.b))
        if len(self.b) < 2 or any(w <= 0.0 for w in self.b):
            raise DegenerateProductionError("weights must be positive, dimension >= 2")

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.sum(y * np.asarray(self.b), axis=-1)


ProductionSpec = Union[CESProduction, LeontiefProduction, LinearProduction]

_SIMPLEX_FLOOR = 1e-9


def _simplex_grid(n: int, resolution: int) -> np.ndarray:
    # Interior barycentric lattice (i_1,...,i_n)/m, all i_j >= 1, in
    # lexicographic order of the index tuple (the deterministic tie-break).
    m = resolution
    pts = []
    for combo in itertools.product(range(1, m), repeat=n - 1):
        rest = m - sum(combo)
        if rest >= 1:
            pts.append(combo + (rest,))
    return np.asarray(pts, dtype=np.float64) / m


def cost_from_production(
    F0: ProductionSpec,
    x,
    grid_resolution: int = 96,
    refinement_steps: int = 60,
) -> float:
    """Dual unit cost q(x) = inf { x.y / F0(y) } over the unit simplex.

    The objective is 0-homogeneous in y, so the infimum over the orthant
    equals the infimum over the simplex; a coarse lexicographic grid search
    seeds a deterministic pattern-descent refinement along coordinate-pair
    directions (which stay on the simplex).
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        raise DomainError("x must be positive")
    n = x.shape[-1]
    if len(F0.b) != n:
        raise DimensionMismatchError(f"production has {len(F0.b)} inputs, x has {n}")

    pts = _simplex_grid(n, grid_resolution)
    Fv = np.asarray(F0(pts), dtype=np.float64)
    good = Fv > 0.0
    if not np.any(good):
        raise DegenerateProductionError("production function vanishes on the simplex")
    obj = np.full(Fv.shape, np.inf)
    obj[good] = pts[good] @ x / Fv[good]
    best = int(np.argmin(obj))  # argmin takes the first (lexicographically smallest) tie
    y = pts[best].copy()
    val = float(obj[best])

    def objective(yv):
        F = float(F0(yv))
        return float(yv @ x) / F if F > 0.0 else np.inf

    h = 1.0 / grid_resolution
    for _ in range(refinement_steps):
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                for sign in (1.0, -1.0):
                    cand = y.copy()
                    cand[i] += sign * h
                    cand[j] -= sign * h
                    if cand[i] < _SIMPLEX_FLOOR or cand[j] < _SIMPLEX_FLOOR:
                        continue
                    v = objective(cand)
                    if v < val:
                        y, val = cand, v
                        improved = True
        if not improved:
            h *= 0.5
            if h < 1e-12:
                break
    return val
