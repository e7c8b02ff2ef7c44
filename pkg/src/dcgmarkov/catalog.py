"""A small catalog of the worked example models used in docs, scripts and tests."""
from __future__ import annotations

from .graphs import DirectedGraph, build_graph
from .linear import LinearSEM
from .nonlinear import (
    BILINEAR_FEEDBACK_EQUATIONS,
    ModelSpec,
    bilinear_feedback_model,
)


def chain_graph() -> DirectedGraph:
    """Z -> Y -> X, the smallest recursive example."""
    return build_graph(("X", "Y", "Z"), [("Y", "X"), ("Z", "Y")])


def chain_sem(a: float = 1.0, b: float = 1.0) -> LinearSEM:
    """X = a*Y + e_X, Y = b*Z + e_Y, Z = e_Z with unit error variances."""
    return LinearSEM(
        chain_graph(),
        {("Y", "X"): a, ("Z", "Y"): b},
        {"X": 1.0, "Y": 1.0, "Z": 1.0},
    )


def coupled_feedback_graph() -> DirectedGraph:
    """Two exogenous drivers each feeding one side of a two-cycle.

    The classic nonrecursive example: the only entailed statements are
    X1 against X2 given nothing and given both cycle members, and the local
    Markov property fails at X3 and X4.
    """
    return build_graph(
        ("X1", "X2", "X3", "X4"),
        [("X1", "X3"), ("X2", "X4"), ("X3", "X4"), ("X4", "X3")],
    )


def coupled_feedback_variant_graph() -> DirectedGraph:
    """The driver edges swapped onto the opposite cycle members; equivalent to the original."""
    return build_graph(
        ("X1", "X2", "X3", "X4"),
        [("X1", "X4"), ("X2", "X3"), ("X3", "X4"), ("X4", "X3")],
    )


def correlated_driver_sem(
    a: float = 0.5, b: float = 0.5, c: float = 0.5, d: float = 0.5, rho: float = 0.4
) -> LinearSEM:
    """Feedback pair driven by two exogenous variables with correlated errors.

    X3 = a*X2 + b*X4 + e3, X4 = c*X1 + d*X3 + e4, X1 and X2 exogenous with
    corr(e1, e2) = rho. Latentizing replaces the correlation with a common
    parent of X1 and X2 without changing any entailed vanishing partial
    correlation over the original four variables.
    """
    graph = build_graph(
        ("X1", "X2", "X3", "X4"),
        [("X2", "X3"), ("X4", "X3"), ("X1", "X4"), ("X3", "X4")],
    )
    return LinearSEM(
        graph,
        {("X2", "X3"): a, ("X4", "X3"): b, ("X1", "X4"): c, ("X3", "X4"): d},
        {v: 1.0 for v in graph.vertices},
        {("X1", "X2"): rho},
    )


def bilinear_feedback_graph() -> DirectedGraph:
    """Induced graph of the bilinear feedback model: X -> W <-> Z <- Y."""
    return bilinear_feedback_model().induced_graph


def two_cyclegroup_graph() -> DirectedGraph:
    """Two separate feedback blocks, one holding three cycles and one holding two."""
    return build_graph(
        ("A", "B", "C", "D", "E", "F"),
        [
            ("A", "B"), ("B", "A"), ("B", "C"), ("C", "B"), ("C", "A"),
            ("C", "D"),
            ("D", "E"), ("E", "D"), ("E", "F"), ("F", "D"),
        ],
    )


__all__ = [
    "BILINEAR_FEEDBACK_EQUATIONS",
    "ModelSpec",
    "bilinear_feedback_graph",
    "bilinear_feedback_model",
    "chain_graph",
    "chain_sem",
    "correlated_driver_sem",
    "coupled_feedback_graph",
    "coupled_feedback_variant_graph",
    "two_cyclegroup_graph",
]
