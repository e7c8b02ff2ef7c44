"""Random graph generators used by the randomized test corpora."""
from __future__ import annotations

import numpy as np

from .graphs import DirectedGraph, build_graph


def _names(n: int) -> tuple[str, ...]:
    return tuple(f"V{i}" for i in range(n))


def random_graph(n: int, edge_prob: float, rng: np.random.Generator) -> DirectedGraph:
    """Each ordered pair of distinct vertices gets an edge independently.

    Two-cycles arise naturally whenever both orientations are drawn.
    """
    names = _names(n)
    edges = [
        (a, b)
        for a in names
        for b in names
        if a != b and rng.random() < edge_prob
    ]
    return build_graph(names, edges)


def random_dag(n: int, edge_prob: float, rng: np.random.Generator) -> DirectedGraph:
    """Random acyclic graph: edges only run forward along a shuffled order."""
    names = _names(n)
    order = list(names)
    rng.shuffle(order)
    edges = [
        (order[i], order[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return build_graph(names, edges)
