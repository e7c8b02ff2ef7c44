"""Linear structural equation models at equilibrium.

Each non-error variable is a linear function of other variables plus its own
error term; the graph has an edge exactly where a coefficient is nonzero.
Cycles model feedback that has settled, so the joint law is simply the one
induced by solving the simultaneous system: with coefficient matrix B and
error covariance O, the implied covariance is (I - B)^-1 O (I - B)^-T.

Whether the model forces a partial correlation to vanish for every admissible
choice of coefficients is decided numerically: the vanishing locus of a
nonzero polynomial has measure zero, so a handful of random draws separates
"identically zero" from "generically nonzero" with overwhelming probability.
All randomness is seeded; identical seeds give identical results. The
sampled oracle only exercises Gaussian errors, which is enough for zero
partial correlations but narrower than the full class of error laws the
entailment notion quantifies over.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.stats import norm

from . import errors
from .data import Dataset
from .graphs import DirectedGraph

#: Seed used whenever a caller does not supply one; never entropy.
DEFAULT_SEED = 1729

#: Condition number beyond which a linear system is treated as singular.
SINGULAR_COND = 1e12


@dataclass(frozen=True)
class OracleConfig:
    """Sampling ranges and decision tolerances for the entailment oracle."""

    coeff_low: float = 0.1
    coeff_high: float = 0.9
    var_low: float = 0.5
    var_high: float = 2.0
    corr_low: float = 0.1
    corr_high: float = 0.8
    max_retries: int = 50
    cond_cap: float = 1e8
    zero_tol: float = 1e-9
    nonzero_tol: float = 1e-5


@dataclass(frozen=True)
class LinearSEM:
    """A directed graph with edge coefficients, error variances and optional error correlations.

    Coefficient keys must equal the edge set exactly, variances must be
    strictly positive, and (I - B) must be invertible; construction fails
    otherwise. Correlated error pairs are stored with the canonically
    earlier vertex first.
    """

    graph: DirectedGraph
    coeff: Mapping[tuple[str, str], float]
    error_variance: Mapping[str, float]
    error_correlations: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeff", {tuple(k): float(v) for k, v in self.coeff.items()})
        object.__setattr__(
            self, "error_variance", {k: float(v) for k, v in self.error_variance.items()}
        )
        index = self.graph.index
        normalized = {}
        for pair, rho in self.error_correlations.items():
            a, b = pair
            if a not in index or b not in index:
                raise errors.UnknownVertex(f"{a}, {b}")
            if a == b:
                raise ValueError("an error term cannot be correlated with itself")
            if not -1.0 < float(rho) < 1.0:
                raise ValueError(f"correlation must lie in (-1, 1): {rho}")
            key = (a, b) if index[a] < index[b] else (b, a)
            if key in normalized:
                raise ValueError(f"correlation for {key} given twice")
            normalized[key] = float(rho)
        object.__setattr__(self, "error_correlations", normalized)

        if set(self.coeff) != set(self.graph.edges):
            raise ValueError("coefficients must cover exactly the graph's edges")
        if set(self.error_variance) != set(self.graph.vertices):
            raise ValueError("every vertex needs an error variance")
        if any(v <= 0 for v in self.error_variance.values()):
            raise ValueError("error variances must be strictly positive")

        i_b = np.eye(len(self.graph.vertices)) - coefficient_matrix(self)
        if not np.all(np.isfinite(i_b)) or np.linalg.cond(i_b) > SINGULAR_COND:
            raise errors.SingularSystem("I - B is not invertible at working precision")
        omega = error_covariance(self)
        if self.error_correlations and np.linalg.eigvalsh(omega).min() <= 0:
            raise ValueError("error covariance is not positive definite")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """A covariance matrix indexed by variable names."""

    variables: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        values = np.asarray(self.values, dtype=float)
        n = len(self.variables)
        if values.shape != (n, n):
            raise ValueError("covariance matrix shape must match the variable count")
        if np.abs(values - values.T).max(initial=0.0) > 1e-12:
            raise ValueError("covariance matrix must be symmetric")
        if n and values.diagonal().min() <= 0:
            raise ValueError("variances must be strictly positive")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def index_of(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise errors.UnknownVertex(name) from None


def coefficient_matrix(sem: LinearSEM) -> np.ndarray:
    """B with B[i, j] equal to the coefficient on the edge (vertex j -> vertex i)."""
    index = sem.graph.index
    b = np.zeros((len(index), len(index)))
    for (tail, head), value in sem.coeff.items():
        b[index[head], index[tail]] = value
    return b


def error_covariance(sem: LinearSEM) -> np.ndarray:
    index = sem.graph.index
    omega = np.diag([sem.error_variance[v] for v in sem.graph.vertices])
    for (a, b), rho in sem.error_correlations.items():
        cov = rho * np.sqrt(sem.error_variance[a] * sem.error_variance[b])
        omega[index[a], index[b]] = omega[index[b], index[a]] = cov
    return omega


def implied_covariance(sem: LinearSEM) -> CovarianceMatrix:
    """Exact covariance of the equilibrium distribution."""
    i_b = np.eye(len(sem.graph.vertices)) - coefficient_matrix(sem)
    if np.linalg.cond(i_b) > SINGULAR_COND:
        raise errors.SingularSystem("I - B is not invertible at working precision")
    half = np.linalg.solve(i_b, error_covariance(sem))
    sigma = np.linalg.solve(i_b, half.T).T
    sigma = (sigma + sigma.T) / 2.0
    return CovarianceMatrix(sem.graph.vertices, sigma)


def _partial_corr_submatrix(sub: np.ndarray) -> float:
    """Partial correlation of the first two indices given the rest."""
    if not np.all(np.isfinite(sub)) or np.linalg.cond(sub) > SINGULAR_COND:
        raise errors.UndefinedPartialCorrelation("singular covariance submatrix")
    prec = np.linalg.inv(sub)
    denom = prec[0, 0] * prec[1, 1]
    if denom <= 0 or not np.isfinite(denom):
        raise errors.UndefinedPartialCorrelation("nonpositive conditional variance")
    return float(-prec[0, 1] / np.sqrt(denom))


def partial_correlation(cov: CovarianceMatrix, x: str, y: str, given: Iterable[str] = ()) -> float:
    """Partial correlation of `x` and `y` given `given`, from the precision of the submatrix."""
    given = list(given)
    if x == y or x in given or y in given:
        raise errors.NonDisjointSets("x, y and the conditioning set must be distinct")
    ix = [cov.index_of(x), cov.index_of(y)] + sorted(cov.index_of(g) for g in given)
    return _partial_corr_submatrix(cov.values[np.ix_(ix, ix)])


def random_parameterization(
    graph: DirectedGraph,
    seed,
    config: OracleConfig | None = None,
    correlated_pairs: Iterable[tuple[str, str]] = (),
) -> LinearSEM:
    """Draw a well-conditioned random SEM over `graph`.

    Coefficient magnitudes stay in [coeff_low, coeff_high] with random signs,
    keeping "nonzero coefficient" numerically meaningful; draws are rejected
    until (I - B) has condition number under `cond_cap`. Declared correlated
    pairs receive a random nonzero error correlation.
    """
    cfg = config or OracleConfig()
    rng = np.random.default_rng(seed)
    edges = sorted(graph.edges, key=lambda e: (graph.index[e[0]], graph.index[e[1]]))
    pairs = sorted(
        {tuple(sorted(p, key=graph.index.__getitem__)) for p in correlated_pairs},
        key=lambda p: (graph.index[p[0]], graph.index[p[1]]),
    )
    n = len(graph.vertices)
    for _ in range(cfg.max_retries):
        coeff = {
            e: rng.choice([-1.0, 1.0]) * rng.uniform(cfg.coeff_low, cfg.coeff_high)
            for e in edges
        }
        variance = {v: rng.uniform(cfg.var_low, cfg.var_high) for v in graph.vertices}
        corr = {
            p: rng.choice([-1.0, 1.0]) * rng.uniform(cfg.corr_low, cfg.corr_high)
            for p in pairs
        }
        b = np.zeros((n, n))
        for (tail, head), value in coeff.items():
            b[graph.index[head], graph.index[tail]] = value
        if np.linalg.cond(np.eye(n) - b) > cfg.cond_cap:
            continue
        try:
            return LinearSEM(graph, coeff, variance, corr)
        except (ValueError, errors.SingularSystem):
            continue
    raise errors.ParameterizationFailed(
        f"no well-conditioned draw within {cfg.max_retries} retries"
    )


@dataclass(frozen=True)
class OracleResult:
    """Outcome of a sampled zero-partial-correlation query."""

    verdict: str  # "entailed" or "not_entailed"
    trials: int
    defined_trials: int
    min_abs_corr: float
    max_abs_corr: float

    @property
    def entailed(self) -> bool:
        return self.verdict == "entailed"


class LinearEntailmentOracle:
    """Shares one batch of random parameterizations across many queries.

    Building the implied covariances once and reusing them makes sweeping a
    whole statement space cheap; `linearly_entails_zero` is the one-shot
    convenience wrapper.
    """

    def __init__(
        self,
        graph: DirectedGraph,
        trials: int = 20,
        seed=DEFAULT_SEED,
        config: OracleConfig | None = None,
        correlated_pairs: Iterable[tuple[str, str]] = (),
    ):
        if trials < 1:
            raise ValueError("trials must be at least 1")
        self.graph = graph
        self.config = config or OracleConfig()
        self.trials = trials
        child_seeds = np.random.SeedSequence(seed).spawn(trials)
        covs = []
        for child in child_seeds:
            sem = random_parameterization(graph, child, self.config, correlated_pairs)
            covs.append(implied_covariance(sem).values)
        self._covs = np.stack(covs)

    def query(self, x: str, y: str, given: Iterable[str] = ()) -> OracleResult:
        given = frozenset(given)
        _ = _check_query(self.graph, x, y, given)
        ix = [self.graph.index[x], self.graph.index[y]] + sorted(
            self.graph.index[g] for g in given
        )
        rho = np.full(self.trials, np.nan)
        for t in range(self.trials):
            try:
                rho[t] = _partial_corr_submatrix(self._covs[t][np.ix_(ix, ix)])
            except errors.UndefinedPartialCorrelation:
                pass
        defined = np.isfinite(rho)
        if not defined.any():
            raise errors.InconclusiveOracle("partial correlation undefined in every trial")
        mags = np.abs(rho[defined])
        cfg = self.config
        lo, hi = float(mags.min()), float(mags.max())
        if hi < cfg.zero_tol:
            verdict = "entailed"
        elif hi > cfg.nonzero_tol:
            verdict = "not_entailed"
        else:
            raise errors.InconclusiveOracle(
                f"all |rho| inside the dead zone [{cfg.zero_tol:g}, {cfg.nonzero_tol:g}]: "
                f"min {lo:.3e}, max {hi:.3e}"
            )
        return OracleResult(verdict, self.trials, int(defined.sum()), lo, hi)


def _check_query(graph: DirectedGraph, x: str, y: str, given: frozenset) -> None:
    unknown = ({x, y} | given) - set(graph.vertices)
    if unknown:
        raise errors.UnknownVertex(", ".join(sorted(unknown)))
    if x == y or x in given or y in given:
        raise errors.NonDisjointSets("x, y and the conditioning set must be distinct")


def linearly_entails_zero(
    graph: DirectedGraph,
    x: str,
    y: str,
    given: Iterable[str] = (),
    trials: int = 20,
    seed=DEFAULT_SEED,
    config: OracleConfig | None = None,
    correlated_pairs: Iterable[tuple[str, str]] = (),
) -> OracleResult:
    """Sampled verdict on whether the model forces the partial correlation to zero.

    Entailed when every defined trial correlation is below `zero_tol`; not
    entailed when some trial exceeds `nonzero_tol`. Anything in between
    raises :class:`~dcgmarkov.errors.InconclusiveOracle` so tolerance trouble
    is loud rather than silent.
    """
    oracle = LinearEntailmentOracle(graph, trials, seed, config, correlated_pairs)
    return oracle.query(x, y, given)


def latentize_correlated_errors(sem: LinearSEM) -> DirectedGraph:
    """Rewrite correlated error pairs as fresh latent common parents.

    Each correlated pair (A, B) gains a new vertex with edges into A and B;
    original edges are untouched and the result carries no correlation
    annotations. The rewritten graph entails exactly the zero partial
    correlations over the original variables that the correlated model does.
    """
    names = list(sem.graph.vertices)
    taken = set(names)
    edges = set(sem.graph.edges)
    counter = 1
    index = sem.graph.index
    for a, b in sorted(sem.error_correlations, key=lambda p: (index[p[0]], index[p[1]])):
        while f"T{counter}" in taken:
            counter += 1
        latent = f"T{counter}"
        counter += 1
        taken.add(latent)
        names.append(latent)
        edges.add((latent, a))
        edges.add((latent, b))
    return DirectedGraph(tuple(names), frozenset(edges))


def simulate(sem: LinearSEM, n: int, seed) -> Dataset:
    """Draw `n` i.i.d. equilibrium rows with jointly normal errors."""
    if n < 1:
        raise ValueError("n must be at least 1")
    i_b = np.eye(len(sem.graph.vertices)) - coefficient_matrix(sem)
    if np.linalg.cond(i_b) > SINGULAR_COND:
        raise errors.SingularSystem("I - B is not invertible at working precision")
    try:
        chol = np.linalg.cholesky(error_covariance(sem))
    except np.linalg.LinAlgError:
        raise errors.SingularSystem("error covariance is not positive definite") from None
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n, len(sem.graph.vertices))) @ chol.T
    rows = np.linalg.solve(i_b, eps.T).T
    return Dataset(sem.graph.vertices, rows)


@dataclass(frozen=True)
class CITestResult:
    verdict: str  # "independent" or "dependent"
    statistic: float
    p_value: float
    corr: float
    n: int

    @property
    def independent(self) -> bool:
        return self.verdict == "independent"


def fisher_z_test(
    dataset: Dataset, x: str, y: str, given: Iterable[str] = (), alpha: float = 0.01
) -> CITestResult:
    """Classic normal-theory test of a vanishing empirical partial correlation."""
    given = list(given)
    if x == y or x in given or y in given:
        raise errors.NonDisjointSets("x, y and the conditioning set must be distinct")
    n = len(dataset)
    if n <= len(given) + 3:
        raise errors.InsufficientData(f"{n} rows cannot support |given| = {len(given)}")
    cols = [dataset.column(x), dataset.column(y)] + [dataset.column(g) for g in given]
    emp = np.cov(np.column_stack(cols), rowvar=False)
    emp = np.atleast_2d(emp)
    r = _partial_corr_submatrix(emp)
    r = min(max(r, -1 + 1e-15), 1 - 1e-15)
    statistic = float(np.sqrt(n - len(given) - 3) * abs(np.arctanh(r)))
    p_value = float(2 * norm.sf(statistic))
    verdict = "independent" if statistic < norm.ppf(1 - alpha / 2) else "dependent"
    return CITestResult(verdict, statistic, p_value, float(r), n)
