"""Nonlinear structural equation models: parsing, equilibria, sampling, density checks.

A model is one equation per variable over other variables and its own error
symbol, written in the small expression grammar of :mod:`dcgmarkov.expr`.
The induced graph has an edge A -> B exactly when A appears in B's equation.

Equilibria are solved per strongly connected component in topological order.
A component whose equations are affine in its own members (given upstream
values) is solved exactly by linear algebra, which covers feedback loops
whose coupling is multiplicative in upstream variables; anything else falls
back to damped fixed-point iteration. Draws with no reachable equilibrium
are rejected during sampling and the rejection count is reported.

d-separation is not sufficient for entailed conditional independence on
cyclic graphs of this kind. The worked bilinear feedback model below is the
counterexample: its equilibrium density is known in closed form, and the
quadrature check exposes the conditional dependence that d-separation on the
original graph misses. d-separation on the collapsed graph is the sound
criterion and is exposed as :func:`entailed_ci_nonlinear`.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import errors, expr
from .data import Dataset
from .graphs import DirectedGraph, build_graph, topological_components
from .separation import IndependenceStatement, collapse, enumerate_entailed_ci

_OVERFLOW_GUARD = 1e150
_SINGULAR_DET = 1e-12


class RecoverabilityWarning(UserWarning):
    """The error term is not additive or multiplicative, so it may not be
    recoverable from the variable and its parents; collapsed-graph
    independence guarantees need that recoverability."""


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError("standard deviation must be positive")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Parsed structural equations plus their induced graph."""

    equations: Mapping[str, expr.Node]
    error_distributions: Mapping[str, Normal]
    induced_graph: DirectedGraph

    @staticmethod
    def error_symbol(vertex: str) -> str:
        return f"e_{vertex}"


_EQUATION = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)")
_ERROR_DECL = re.compile(
    r"error\s+e_([A-Za-z_][A-Za-z0-9_]*)\s*~\s*normal\s*\(\s*"
    r"([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*,\s*"
    r"([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\)\s*"
)


def _statements(text: str):
    """Yield (line, column, fragment) with comments stripped and ';' splits."""
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        col = 0
        for piece in line.split(";"):
            if piece.strip():
                lead = len(piece) - len(piece.lstrip())
                yield line_no, col + lead, piece.strip()
            col += len(piece) + 1


def parse_model(text: str) -> ModelSpec:
    """Parse model text into equations, error laws and the induced graph.

    Every right-hand-side name must be another equation's variable or the
    equation's own error symbol `e_<variable>`. Undeclared error laws default
    to the standard normal. Equations whose error term is neither an additive
    nor a multiplicative factor are accepted with a RecoverabilityWarning.
    """
    equations: dict[str, expr.Node] = {}
    declared: dict[str, Normal] = {}
    for line_no, col, fragment in _statements(text):
        decl = _ERROR_DECL.fullmatch(fragment)
        if decl is not None:
            name, mean, sd = decl.group(1), float(decl.group(2)), float(decl.group(3))
            if sd <= 0:
                raise errors.ParseError("standard deviation must be positive", line_no, col + 1)
            if name in declared:
                raise errors.DuplicateEquation(f"error law for e_{name} given twice")
            declared[name] = Normal(mean, sd)
            continue
        eq = _EQUATION.fullmatch(fragment)
        if eq is None:
            raise errors.ParseError(f"unrecognised statement: {fragment!r}", line_no, col + 1)
        name, rhs = eq.group(1), eq.group(2)
        if name.startswith("e_"):
            raise errors.ParseError(
                "names starting with 'e_' are reserved for error terms", line_no, col + 1
            )
        if name in equations:
            raise errors.DuplicateEquation(name)
        equations[name] = expr.parse(rhs, line_no, col + len(fragment) - len(rhs))

    if not equations:
        raise errors.ParseError("model defines no equations")

    vertices = tuple(equations)
    known = set(vertices)
    edges = set()
    for vertex, node in equations.items():
        own_error = ModelSpec.error_symbol(vertex)
        for symbol in sorted(expr.variables(node)):
            if symbol == own_error:
                continue
            if symbol in known:
                edges.add((symbol, vertex))
            else:
                raise errors.UnknownSymbol(
                    f"{symbol!r} in the equation for {vertex} is neither a declared "
                    f"variable nor {own_error}"
                )

    for name in declared:
        if name not in known:
            raise errors.MissingEquation(f"error law declared for e_{name} but {name} has no equation")

    graph = build_graph(vertices, sorted(edges))
    distributions = {
        ModelSpec.error_symbol(v): declared.get(v, Normal(0.0, 1.0)) for v in vertices
    }

    for vertex, node in equations.items():
        if not _error_recoverable(node, ModelSpec.error_symbol(vertex)):
            warnings.warn(
                f"equation for {vertex}: error term is not an additive or multiplicative "
                "factor, so it may not be recoverable from the variable and its parents",
                RecoverabilityWarning,
                stacklevel=2,
            )
    return ModelSpec(equations, distributions, graph)


def _error_recoverable(node: expr.Node, error: str) -> bool:
    addends = expr.flatten_sum(node)
    holders = [a for a in addends if error in expr.variables(a)]
    if len(holders) != 1:
        return False
    term = holders[0]
    if isinstance(term, expr.Var):
        return True
    factors = expr.flatten_product(term)
    involved = [f for f in factors if error in expr.variables(f)]
    return len(involved) == 1 and isinstance(involved[0], expr.Var)


# ---------------------------------------------------------------- solving


def solve_equilibrium(
    spec: ModelSpec,
    error_values: Mapping[str, float],
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    method: str = "auto",
) -> dict[str, float]:
    """Vertex values satisfying all equations simultaneously for one error draw.

    Acyclic parts are evaluated by topological substitution. Under the
    default method, a cyclic component affine in its own members is solved
    exactly (the system being singular for these error values raises
    NoConvergence); other cyclic components run damped fixed-point iteration
    from zero, new = (1 - damping) * old + damping * f(old), raising
    NoConvergence on divergence or when `max_iter` updates do not settle
    within `tol`. `method="iterate"` forces the iteration on every cyclic
    component, which is useful for cross-validating the exact path but
    diverges outside the iteration's contraction region even where an
    equilibrium exists.
    """
    needed = {ModelSpec.error_symbol(v) for v in spec.induced_graph.vertices}
    missing = needed - set(error_values)
    if missing:
        raise ValueError("missing error values: " + ", ".join(sorted(missing)))
    arrays = {k: np.asarray([float(error_values[k])]) for k in needed}
    values, ok = _solve_rows(spec, arrays, damping, tol, max_iter, method)
    if not ok[0]:
        raise errors.NoConvergence("no equilibrium for these error values")
    return {v: float(values[v][0]) for v in spec.induced_graph.vertices}


def _solve_rows(
    spec: ModelSpec,
    error_arrays: Mapping[str, np.ndarray],
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    method: str = "auto",
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Vectorized equilibrium solve across rows; returns values and a per-row ok mask."""
    if method not in ("auto", "iterate"):
        raise ValueError(f"unknown method {method!r}")
    graph = spec.induced_graph
    n_rows = len(next(iter(error_arrays.values()))) if error_arrays else 0
    ok = np.ones(n_rows, dtype=bool)
    values: dict[str, np.ndarray] = {}

    def env():
        return {**error_arrays, **values}

    for comp in topological_components(graph):
        if len(comp) == 1:
            v = comp[0]
            with np.errstate(all="ignore"):
                out = expr.evaluate(spec.equations[v], env())
            out = np.broadcast_to(np.asarray(out, dtype=float), (n_rows,)).copy()
            out[~ok] = np.nan
            ok &= np.isfinite(out)
            values[v] = out
            continue

        members = list(comp)
        local = frozenset(members)
        try:
            if method == "iterate":
                raise expr.NotAffine
            forms = []
            with np.errstate(all="ignore"):
                for m in members:
                    forms.append(expr.affine_form(spec.equations[m], local, env()))
        except expr.NotAffine:
            _iterate_component(spec, members, error_arrays, values, ok, damping, tol, max_iter)
            continue

        k = len(members)
        a = np.zeros((n_rows, k, k))
        b = np.zeros((n_rows, k))
        for i, (const, coeffs) in enumerate(forms):
            b[:, i] = np.broadcast_to(np.asarray(const, dtype=float), (n_rows,))
            for name, coeff in coeffs.items():
                a[:, i, members.index(name)] = np.broadcast_to(
                    np.asarray(coeff, dtype=float), (n_rows,)
                )
        system = np.broadcast_to(np.eye(k), (n_rows, k, k)).copy() - a
        with np.errstate(all="ignore"):
            det = np.linalg.det(system)
        solvable = ok & np.isfinite(det) & (np.abs(det) > _SINGULAR_DET)
        solvable &= np.isfinite(b).all(axis=1) & np.isfinite(system).all(axis=(1, 2))
        solution = np.full((n_rows, k), np.nan)
        if solvable.any():
            solution[solvable] = np.linalg.solve(system[solvable], b[solvable][..., None])[..., 0]
        solvable &= np.isfinite(solution).all(axis=1)
        ok &= solvable
        for j, m in enumerate(members):
            values[m] = solution[:, j]

    return values, ok


def _iterate_component(spec, members, error_arrays, values, ok, damping, tol, max_iter):
    n_rows = len(ok)
    current = {m: np.zeros(n_rows) for m in members}
    active = ok.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        env = {**error_arrays, **values, **current}
        with np.errstate(all="ignore"):
            updates = {
                m: (1.0 - damping) * current[m]
                + damping * np.broadcast_to(
                    np.asarray(expr.evaluate(spec.equations[m], env), dtype=float), (n_rows,)
                )
                for m in members
            }
        bad = np.zeros(n_rows, dtype=bool)
        delta = np.zeros(n_rows)
        for m in members:
            new = np.where(active, updates[m], current[m])
            bad |= active & (~np.isfinite(new) | (np.abs(new) > _OVERFLOW_GUARD))
            with np.errstate(invalid="ignore"):
                delta = np.maximum(delta, np.abs(new - current[m]))
            current[m] = new
        ok[bad] = False
        active &= ~bad
        settled = active & (delta < tol)
        active &= ~settled
    ok[active] = False  # ran out of iterations
    for m in members:
        values[m] = np.where(ok, current[m], np.nan)


# ---------------------------------------------------------------- sampling


def sample(spec: ModelSpec, n: int, seed) -> Dataset:
    """Push `n` fresh error draws through the equilibrium solver.

    Draws with no equilibrium are rejected and redrawn; the count lands in
    ``Dataset.rejected``. Persistent failure (more than half of at least 500
    attempts) raises ExcessiveRejection, flagging the model as unstable.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    graph = spec.induced_graph
    blocks: list[np.ndarray] = []
    accepted = 0
    attempts = 0
    rejected = 0
    while accepted < n:
        batch = max(n - accepted, 32)
        error_arrays = {}
        for v in graph.vertices:
            law = spec.error_distributions[ModelSpec.error_symbol(v)]
            error_arrays[ModelSpec.error_symbol(v)] = (
                rng.standard_normal(batch) * law.sd + law.mean
            )
        values, ok = _solve_rows(spec, error_arrays)
        rows = np.column_stack([values[v] for v in graph.vertices])
        keep = rows[ok][: n - accepted]
        blocks.append(keep)
        accepted += len(keep)
        attempts += batch
        rejected += int((~ok).sum())
        if attempts >= 500 and rejected > attempts / 2:
            raise errors.ExcessiveRejection(
                f"{rejected} of {attempts} draws failed to reach an equilibrium"
            )
    return Dataset(graph.vertices, np.vstack(blocks), rejected=rejected)


# ---------------------------------------------------------------- the bilinear feedback example

#: Two exogenous variables multiplicatively coupled into a two-cycle. The
#: textbook witness that d-separation on a cyclic graph can hold while the
#: corresponding conditional independence fails.
BILINEAR_FEEDBACK_EQUATIONS = "X = e_X; Y = e_Y; Z = W*Y + e_Z; W = Z*X + e_W"


def bilinear_feedback_model() -> ModelSpec:
    return parse_model(BILINEAR_FEEDBACK_EQUATIONS)


def bilinear_feedback_solution(e_x, e_y, e_z, e_w) -> dict[str, float]:
    """Closed-form equilibrium of the bilinear feedback model.

    Defined whenever e_x * e_y != 1; on that surface the error-to-state map
    is not invertible and SingularPoint is raised.
    """
    denom = 1.0 - np.asarray(e_x) * np.asarray(e_y)
    if np.any(denom == 0):
        raise errors.SingularPoint("e_x * e_y = 1")
    return {
        "X": e_x,
        "Y": e_y,
        "Z": (e_w * e_y + e_z) / denom,
        "W": (e_z * e_x + e_w) / denom,
    }


_QUARTER_PI2 = 1.0 / (4.0 * np.pi**2)


def bilinear_feedback_density(x: float, y: float, z: float, w: float) -> float:
    """Equilibrium density of the bilinear feedback model at one point.

    The change-of-variables factor is |1 - x*y|: the error-to-state map has
    Jacobian determinant 1 / (1 - x*y), so transforming the standard normal
    error density multiplies by the absolute determinant of the inverse map.
    With this factor the density integrates to one over the whole space,
    which the quadrature test suite verifies against Monte Carlo box masses.
    Raises SingularPoint on the surface x*y = 1, where the map is not 1-1.
    """
    if x * y == 1.0:
        raise errors.SingularPoint("x * y = 1")
    return float(
        _QUARTER_PI2
        * np.exp(-0.5 * x * x)
        * np.exp(-0.5 * y * y)
        * np.exp(-0.5 * (z - w * y) ** 2)
        * np.exp(-0.5 * (w - z * x) ** 2)
        * abs(1.0 - x * y)
    )


def bilinear_feedback_density_grid(x, y, z, w) -> np.ndarray:
    """Vectorized density over broadcast arrays.

    Uses the continuous extension (value zero) on the singular surface so
    quadrature grids that happen to touch x*y = 1 stay well defined.
    """
    x, y, z, w = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x, y, z, w))
    )
    return (
        _QUARTER_PI2
        * np.exp(-0.5 * x * x)
        * np.exp(-0.5 * y * y)
        * np.exp(-0.5 * (z - w * y) ** 2)
        * np.exp(-0.5 * (w - z * x) ** 2)
        * np.abs(1.0 - x * y)
    )


# ---------------------------------------------------------------- quadrature CI check


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite-Simpson settings for the factorization check."""

    lower: float = -8.0
    upper: float = 8.0
    nodes: int = 201
    underflow: float = 1e-300

    def __post_init__(self):
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError("Simpson's rule needs an odd node count of at least 3")
        if not self.lower < self.upper:
            raise ValueError("grid bounds must be increasing")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.nodes)

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(self.nodes)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * ((self.upper - self.lower) / (self.nodes - 1) / 3.0)


@dataclass(frozen=True)
class FactorizationReport:
    """Largest pointwise gap between the joint conditional and the product of marginals."""

    max_violation: float
    worst_point: dict[str, float] | None
    skipped: tuple[dict[str, float], ...]
    points_evaluated: int


def ci_factorization_check(
    density: Callable[..., float],
    variable_order: Sequence[str],
    x: str,
    y: str,
    conditioning_points: Iterable[Mapping[str, float]],
    grid: QuadratureGrid | None = None,
    vectorized: bool = False,
) -> FactorizationReport:
    """Measure how far f(x, y | rest) is from f(x | rest) * f(y | rest).

    For each conditioning point, the joint over (x, y) is evaluated on a
    Simpson grid; marginals and the normalizer come from 1-D and 2-D
    quadrature over that grid. Conditioning points where the normalizer
    underflows are skipped and reported. Pass ``vectorized=True`` when
    `density` accepts broadcast numpy arrays.
    """
    grid = grid or QuadratureGrid()
    order = list(variable_order)
    if x == y or x not in order or y not in order:
        raise errors.NonDisjointSets("x and y must be two distinct density variables")
    rest = [v for v in order if v != x and v != y]

    axis = grid.axis
    weights = grid.weights
    xs, ys = np.meshgrid(axis, axis, indexing="ij")

    worst = 0.0
    worst_point = None
    skipped: list[dict[str, float]] = []
    evaluated = 0
    for point in conditioning_points:
        if set(point) != set(rest):
            raise ValueError(
                f"conditioning point must assign exactly {sorted(rest)}; got {sorted(point)}"
            )
        if vectorized:
            args = [xs if v == x else ys if v == y else np.full_like(xs, point[v]) for v in order]
            joint = np.asarray(density(*args), dtype=float)
        else:
            joint = np.empty_like(xs)
            for i in range(grid.nodes):
                for j in range(grid.nodes):
                    args = [
                        axis[i] if v == x else axis[j] if v == y else point[v] for v in order
                    ]
                    joint[i, j] = density(*args)
        normalizer = float(weights @ joint @ weights)
        if normalizer < grid.underflow:
            skipped.append(dict(point))
            continue
        evaluated += 1
        marginal_x = joint @ weights
        marginal_y = weights @ joint
        gap = np.abs(joint / normalizer - np.outer(marginal_x, marginal_y) / normalizer**2)
        peak = int(np.argmax(gap))
        if gap.flat[peak] > worst:
            worst = float(gap.flat[peak])
            i, j = np.unravel_index(peak, gap.shape)
            worst_point = {x: float(axis[i]), y: float(axis[j]), **{k: float(v) for k, v in point.items()}}
    return FactorizationReport(worst, worst_point, tuple(skipped), evaluated)


def entailed_ci_nonlinear(graph: DirectedGraph, max_vertices: int = 8) -> list[IndependenceStatement]:
    """Statements entailed for every model with this graph: d-separation on the collapsed graph.

    Sound for cyclic graphs, where plain d-separation is not, and identical
    to plain d-separation on acyclic graphs.
    """
    return enumerate_entailed_ci(collapse(graph), max_vertices)
