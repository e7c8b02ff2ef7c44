"""Separation, Markov enumeration and equilibrium SEM oracles for directed graphs with cycles."""

from . import catalog, errors
from .data import Dataset
from .expr import parse as parse_expression
from .formats import (
    format_graph,
    format_linear_sem,
    format_statement,
    load_graph,
    load_linear_sem,
    parse_graph,
    parse_linear_sem,
    statement_to_json,
)
from .generate import random_dag, random_graph
from .graphs import (
    Cycle,
    Cyclegroup,
    DirectedGraph,
    build_graph,
    cyclegroups,
    enumerate_cycles,
    topological_components,
)
from .linear import (
    DEFAULT_SEED,
    CITestResult,
    CovarianceMatrix,
    LinearEntailmentOracle,
    LinearSEM,
    OracleConfig,
    OracleResult,
    fisher_z_test,
    implied_covariance,
    latentize_correlated_errors,
    linearly_entails_zero,
    partial_correlation,
    random_parameterization,
    simulate,
)
from .nonlinear import (
    BILINEAR_FEEDBACK_EQUATIONS,
    FactorizationReport,
    ModelSpec,
    Normal,
    QuadratureGrid,
    RecoverabilityWarning,
    bilinear_feedback_density,
    bilinear_feedback_density_grid,
    bilinear_feedback_model,
    bilinear_feedback_solution,
    ci_factorization_check,
    entailed_ci_nonlinear,
    parse_model,
    sample,
    solve_equilibrium,
)
from .separation import (
    IndependenceStatement,
    UndirectedGraph,
    check_local_global_gap,
    collapse,
    d_separated,
    d_separated_path,
    enumerate_entailed_ci,
    local_markov_statements,
    markov_equivalent,
    moralize,
    useparated,
)

__version__ = "0.1.0"
