"""Moralization, separation, collapsed graphs and Markov-statement enumeration.

d-separation on directed graphs, cyclic or not, is decided here by the
moral-ancestral method: restrict to the ancestors of the query sets, moralize,
and test plain undirected separation. A slower path-walking oracle implements
the classic d-connecting-path definition directly and exists to cross-check
the normative method; the two must agree everywhere, and the test suite
enforces that on randomized graph corpora.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable

from . import errors
from .graphs import DirectedGraph

#: Largest vertex count for which the full statement space is enumerated.
MAX_ENUMERATION_VERTICES = 8


@dataclass(frozen=True)
class UndirectedGraph:
    """Vertices plus symmetric adjacency, stored as name-sorted pairs."""

    vertices: tuple[str, ...]
    adjacency: frozenset[tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "adjacency", frozenset(tuple(p) for p in self.adjacency))
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise errors.DuplicateVertex("duplicate vertex in undirected graph")
        for a, b in self.adjacency:
            if a == b:
                raise errors.SelfLoop(f"{a} - {b}")
            if a not in known or b not in known:
                raise errors.UnknownEndpoint(f"{a} - {b}")
            if not a < b:
                raise ValueError(f"adjacency pair not name-sorted: {(a, b)!r}")

    @cached_property
    def _neighbor_map(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for a, b in self.adjacency:
            acc[a].add(b)
            acc[b].add(a)
        return {v: frozenset(s) for v, s in acc.items()}

    def neighbors(self, vertex: str) -> frozenset[str]:
        if vertex not in self._neighbor_map:
            raise errors.UnknownVertex(vertex)
        return self._neighbor_map[vertex]


@dataclass(frozen=True)
class IndependenceStatement:
    """The assertion that `x` and `y` are independent given `z`."""

    x: frozenset[str]
    y: frozenset[str]
    z: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "x", frozenset(self.x))
        object.__setattr__(self, "y", frozenset(self.y))
        object.__setattr__(self, "z", frozenset(self.z))
        if not self.x or not self.y:
            raise errors.EmptyVertexSet("x and y must be nonempty")
        if self.x & self.y or self.x & self.z or self.y & self.z:
            raise errors.NonDisjointSets("x, y and z must be pairwise disjoint")


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def _check_triple(known: Iterable[str], x, y, z) -> tuple[frozenset, frozenset, frozenset]:
    x, y, z = frozenset(x), frozenset(y), frozenset(z)
    unknown = (x | y | z) - set(known)
    if unknown:
        raise errors.UnknownVertex(", ".join(sorted(unknown)))
    if not x or not y:
        raise errors.EmptyVertexSet("x and y must be nonempty")
    if x & y or x & z or y & z:
        raise errors.NonDisjointSets("x, y and z must be pairwise disjoint")
    return x, y, z


def moralize(graph: DirectedGraph) -> UndirectedGraph:
    """Drop edge directions and marry every pair of parents sharing a child."""
    pairs = {_pair(t, h) for t, h in graph.edges}
    for v in graph.vertices:
        for a, b in combinations(sorted(graph.parents(v)), 2):
            pairs.add(_pair(a, b))
    return UndirectedGraph(graph.vertices, frozenset(pairs))


def useparated(graph: UndirectedGraph, x, y, z) -> bool:
    """True when every path from `x` to `y` passes through `z`."""
    x, y, z = _check_triple(graph.vertices, x, y, z)
    seen = set(x)
    frontier = list(x)
    while frontier:
        v = frontier.pop()
        for w in graph.neighbors(v):
            if w in z or w in seen:
                continue
            if w in y:
                return False
            seen.add(w)
            frontier.append(w)
    return True


def d_separated(graph: DirectedGraph, x, y, z) -> bool:
    """Separation of `x` from `y` given `z` in the moralized ancestral subgraph.

    This is the normative definition used throughout the package, valid for
    cyclic and acyclic graphs alike.
    """
    x, y, z = _check_triple(graph.vertices, x, y, z)
    ancestral = graph.induced_subgraph(graph.ancestors(x | y | z))
    return useparated(moralize(ancestral), x, y, z)


def d_separated_path(graph: DirectedGraph, x, y, z) -> bool:
    """Path-walking d-separation oracle.

    Searches for a vertex-simple undirected path from `x` to `y` on which
    every collider has a descendant in `z` and no non-collider lies in `z`.
    When a two-cycle joins two consecutive path vertices, both edge choices
    are explored, since the vertex pair alone no longer determines the edge.
    Exponential in the worst case; meant as an independent cross-check of
    :func:`d_separated`, not as the production decision procedure.
    """
    x, y, z = _check_triple(graph.vertices, x, y, z)
    relevant = graph.ancestors(x | y | z)
    descendants_cache: dict[str, frozenset[str]] = {}

    def collider_open(v: str) -> bool:
        if v not in descendants_cache:
            descendants_cache[v] = graph.descendants({v})
        return not z.isdisjoint(descendants_cache[v])

    neighbor_map: dict[str, list[str]] = {v: [] for v in relevant}
    for tail, head in graph.edges:
        if tail in relevant and head in relevant:
            if head not in neighbor_map[tail]:
                neighbor_map[tail].append(head)
            if tail not in neighbor_map[head]:
                neighbor_map[head].append(tail)

    for start in sorted(x, key=graph.index.__getitem__):
        # state: (vertex, whether the arriving edge points into it, visited set)
        stack: list[tuple[str, bool | None, frozenset[str]]] = [(start, None, frozenset({start}))]
        while stack:
            v, arrived_into, visited = stack.pop()
            for w in neighbor_map[v]:
                if w in visited:
                    continue
                options = []
                if (v, w) in graph.edges:
                    options.append(True)   # traverse v -> w, pointing into w
                if (w, v) in graph.edges:
                    options.append(False)  # traverse against w -> v
                for into_w in options:
                    if arrived_into is not None:
                        is_collider = arrived_into and not into_w
                        if is_collider:
                            if not collider_open(v):
                                continue
                        elif v in z:
                            continue
                    if w in y:
                        return False
                    if w in x:
                        continue  # a path from w itself is explored separately
                    stack.append((w, into_w, visited | {w}))
    return True


def collapse(graph: DirectedGraph, order: Iterable[str] | None = None) -> DirectedGraph:
    """Replace every cyclegroup with a totally ordered acyclic block.

    For each nontrivial strongly connected component: its internal edges are
    removed, its members are joined lower-to-higher along `order` (canonical
    vertex order by default), and every outside parent of any member becomes
    a parent of all members. The result is always acyclic, and separations
    that hold in it also hold in the original graph. The choice of numbering
    does not affect the resulting separation relations.
    """
    names = tuple(order) if order is not None else graph.vertices
    if sorted(names) != sorted(graph.vertices):
        raise errors.VertexSetMismatch("numbering order must cover exactly the graph's vertices")
    rank = {v: i for i, v in enumerate(names)}

    edges = set(graph.edges)
    for comp in graph.strongly_connected_components():
        if len(comp) == 1:
            continue
        group = set(comp)
        outside_parents = {p for m in group for p in graph.parents(m)} - group
        edges -= {(a, b) for a, b in graph.edges if a in group and b in group}
        ranked = sorted(group, key=rank.__getitem__)
        for i, a in enumerate(ranked):
            for b in ranked[i + 1:]:
                edges.add((a, b))
        for p in sorted(outside_parents):
            for m in ranked:
                edges.add((p, m))
    return DirectedGraph(graph.vertices, frozenset(edges))


def local_markov_statements(graph: DirectedGraph) -> list[IndependenceStatement]:
    """One statement per vertex: independent of its non-parental non-descendants given its parents.

    Vertices whose non-parental non-descendant set is empty contribute nothing.
    """
    out = []
    everything = set(graph.vertices)
    for w in graph.vertices:
        pa = graph.parents(w)
        rest = everything - graph.descendants({w}) - pa
        if rest:
            out.append(IndependenceStatement(frozenset({w}), frozenset(rest), frozenset(pa)))
    return out


def check_local_global_gap(graph: DirectedGraph) -> list[IndependenceStatement]:
    """Local Markov statements that fail d-separation.

    Empty for every acyclic graph; cyclic graphs can and do produce failures.
    """
    return [
        s for s in local_markov_statements(graph) if not d_separated(graph, s.x, s.y, s.z)
    ]


def enumerate_entailed_ci(
    graph: DirectedGraph, max_vertices: int = MAX_ENUMERATION_VERTICES
) -> list[IndependenceStatement]:
    """All d-separated singleton-pair statements, in canonical order.

    Each unordered vertex pair appears once, with the conditioning set ranging
    over every subset of the remaining vertices (by size, then canonically).
    Set-valued statements follow from these by composition, so this list is
    the canonical signature used for equivalence comparison.
    """
    names = graph.vertices
    if len(names) > max_vertices:
        raise errors.GraphTooLarge(
            f"{len(names)} vertices exceeds the enumeration cap of {max_vertices}"
        )
    out = []
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            rest = [v for v in names if v != x and v != y]
            for size in range(len(rest) + 1):
                for given in combinations(rest, size):
                    if d_separated(graph, {x}, {y}, set(given)):
                        out.append(
                            IndependenceStatement(frozenset({x}), frozenset({y}), frozenset(given))
                        )
    return out


def markov_equivalent(
    g1: DirectedGraph, g2: DirectedGraph, max_vertices: int = MAX_ENUMERATION_VERTICES
) -> bool:
    """Whether two graphs over the same vertices entail identical statement sets.

    Brute-force signature comparison; intended for small graphs only.
    """
    if set(g1.vertices) != set(g2.vertices):
        raise errors.VertexSetMismatch(
            "graphs compared for equivalence must share a vertex set"
        )
    return set(enumerate_entailed_ci(g1, max_vertices)) == set(
        enumerate_entailed_ci(g2, max_vertices)
    )
