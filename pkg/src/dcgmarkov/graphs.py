"""Directed graphs that may contain cycles, plus the reachability and cycle machinery.

Vertex order is fixed at construction and acts as the canonical order for all
deterministic tie-breaking: component ordering, collapsed-graph numbering and
serialization. Ancestor and descendant relations are reflexive, so every
vertex is an ancestor and a descendant of itself. Graphs are immutable after
construction and every operation here is a pure function, safe to call from
concurrent threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from . import errors

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: Largest vertex count for which exhaustive cycle enumeration is attempted.
MAX_CYCLE_VERTICES = 10


@dataclass(frozen=True)
class DirectedGraph:
    """An ordered vertex tuple and a set of directed edges (tail, head).

    Both (A, B) and (B, A) may be present at once (a two-cycle); self-loops
    are rejected.
    """

    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        seen = set()
        for name in self.vertices:
            if not _NAME.match(name):
                raise ValueError(f"invalid vertex name: {name!r}")
            if name in seen:
                raise errors.DuplicateVertex(name)
            seen.add(name)
        for tail, head in self.edges:
            if tail == head:
                raise errors.SelfLoop(f"{tail} -> {head}")
            if tail not in seen or head not in seen:
                raise errors.UnknownEndpoint(f"{tail} -> {head}")

    # ------------------------------------------------------------ lookup

    @cached_property
    def index(self) -> dict[str, int]:
        """Canonical position of each vertex."""
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def _parent_map(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for tail, head in self.edges:
            acc[head].add(tail)
        return {v: frozenset(s) for v, s in acc.items()}

    @cached_property
    def _child_map(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for tail, head in self.edges:
            acc[tail].add(head)
        return {v: frozenset(s) for v, s in acc.items()}

    def _require(self, names: Iterable[str]) -> frozenset[str]:
        names = frozenset(names)
        unknown = names - set(self.vertices)
        if unknown:
            raise errors.UnknownVertex(", ".join(sorted(unknown)))
        return names

    def sort(self, names: Iterable[str]) -> list[str]:
        """Return the given vertices in canonical order."""
        return sorted(self._require(names), key=self.index.__getitem__)

    # ------------------------------------------------------------ relations

    def parents(self, vertex: str) -> frozenset[str]:
        self._require([vertex])
        return self._parent_map[vertex]

    def children(self, vertex: str) -> frozenset[str]:
        self._require([vertex])
        return self._child_map[vertex]

    def ancestors(self, subset: Iterable[str]) -> frozenset[str]:
        """All vertices with a directed path into `subset`, including `subset` itself."""
        seen = set(self._require(subset))
        frontier = list(seen)
        while frontier:
            for p in self._parent_map[frontier.pop()]:
                if p not in seen:
                    seen.add(p)
                    frontier.append(p)
        return frozenset(seen)

    def descendants(self, subset: Iterable[str]) -> frozenset[str]:
        """All vertices reachable from `subset` by directed paths, including `subset`."""
        seen = set(self._require(subset))
        frontier = list(seen)
        while frontier:
            for c in self._child_map[frontier.pop()]:
                if c not in seen:
                    seen.add(c)
                    frontier.append(c)
        return frozenset(seen)

    def induced_subgraph(self, subset: Iterable[str]) -> "DirectedGraph":
        keep = self._require(subset)
        return DirectedGraph(
            tuple(v for v in self.vertices if v in keep),
            frozenset(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    def reverse(self) -> "DirectedGraph":
        return DirectedGraph(self.vertices, frozenset((h, t) for t, h in self.edges))

    # ------------------------------------------------------------ cycle structure

    def is_acyclic(self) -> bool:
        return all(len(c) == 1 for c in self.strongly_connected_components())

    def strongly_connected_components(self) -> tuple[tuple[str, ...], ...]:
        """SCC partition, components ordered by their smallest canonical index.

        Iterative Tarjan so deep graphs cannot hit the recursion limit.
        """
        index: dict[str, int] = {}
        low: dict[str, int] = {}
        on_stack: set[str] = set()
        stack: list[str] = []
        out: list[list[str]] = []
        counter = 0

        def ordered_children(v):
            return sorted(self._child_map[v], key=self.index.__getitem__)

        for start in self.vertices:
            if start in index:
                continue
            index[start] = low[start] = counter
            counter += 1
            stack.append(start)
            on_stack.add(start)
            work = [(start, iter(ordered_children(start)))]
            while work:
                v, children = work[-1]
                pushed = False
                for w in children:
                    if w not in index:
                        index[w] = low[w] = counter
                        counter += 1
                        stack.append(w)
                        on_stack.add(w)
                        work.append((w, iter(ordered_children(w))))
                        pushed = True
                        break
                    if w in on_stack:
                        low[v] = min(low[v], index[w])
                if pushed:
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)

        out.sort(key=lambda comp: min(self.index[m] for m in comp))
        return tuple(tuple(sorted(comp, key=self.index.__getitem__)) for comp in out)


def build_graph(vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> DirectedGraph:
    """Validate and construct a graph from explicit vertex and edge listings.

    Unlike the constructor, this sees the raw edge sequence and can therefore
    reject duplicate edge listings.
    """
    edge_list = [tuple(e) for e in edges]
    seen = set()
    for e in edge_list:
        if e in seen:
            raise errors.DuplicateEdge(f"{e[0]} -> {e[1]}")
        seen.add(e)
    return DirectedGraph(tuple(vertices), frozenset(edge_list))


def topological_components(graph: DirectedGraph) -> tuple[tuple[str, ...], ...]:
    """SCCs in a topological order of the condensation, deterministically tie-broken."""
    comps = graph.strongly_connected_components()
    home = {v: i for i, comp in enumerate(comps) for v in comp}
    succs: list[set[int]] = [set() for _ in comps]
    indeg = [0] * len(comps)
    for tail, head in graph.edges:
        a, b = home[tail], home[head]
        if a != b and b not in succs[a]:
            succs[a].add(b)
            indeg[b] += 1
    ready = sorted(i for i, d in enumerate(indeg) if d == 0)
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        opened = []
        for j in sorted(succs[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                opened.append(j)
        ready = sorted(ready + opened)
    return tuple(comps[i] for i in order)


@dataclass(frozen=True)
class Cycle:
    """A simple directed cycle, stored as its edge sequence.

    Edges chain head-to-tail and close back on the first tail; each vertex
    lies on exactly two of the listed edges. The stored rotation starts at
    the cycle's vertex of smallest canonical index, which makes equal cycles
    compare equal.
    """

    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        if len(self.edges) < 2:
            raise ValueError("a cycle visits at least two vertices")
        tails = [t for t, _ in self.edges]
        if len(set(tails)) != len(tails):
            raise ValueError("cycle revisits a vertex")
        for (_, head), (tail, _) in zip(self.edges, self.edges[1:] + self.edges[:1]):
            if head != tail:
                raise ValueError("cycle edges do not chain")

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.edges)


@dataclass(frozen=True)
class Cyclegroup:
    """A maximal family of cycles chained together by shared vertices.

    Equivalently the vertex set is a nontrivial strongly connected component;
    that equivalence is exercised by a randomized property test. `cycles` is
    populated only when the graph was small enough to enumerate.
    """

    vertex_set: frozenset[str]
    cycles: tuple[Cycle, ...] = ()


def enumerate_cycles(graph: DirectedGraph, max_vertices: int = MAX_CYCLE_VERTICES) -> list[Cycle]:
    """Every simple directed cycle, deduplicated up to rotation.

    Exponential search, guarded by `max_vertices`.
    """
    if len(graph.vertices) > max_vertices:
        raise errors.GraphTooLarge(
            f"{len(graph.vertices)} vertices exceeds the enumeration cap of {max_vertices}"
        )
    index = graph.index
    found: list[Cycle] = []

    for root in graph.vertices:
        base = index[root]
        path = [root]
        on_path = {root}

        def walk(current):
            for child in sorted(graph.children(current), key=index.__getitem__):
                if child == root and len(path) >= 2:
                    closed = path + [root]
                    found.append(Cycle(tuple(zip(closed, closed[1:]))))
                elif index[child] > base and child not in on_path:
                    path.append(child)
                    on_path.add(child)
                    walk(child)
                    path.pop()
                    on_path.discard(child)

        walk(root)
    return found


def cyclegroups(graph: DirectedGraph, max_vertices: int = MAX_CYCLE_VERTICES) -> list[Cyclegroup]:
    """One cyclegroup per nontrivial SCC, in canonical order.

    Never raises: past the enumeration cap the groups carry vertex sets only.
    """
    nontrivial = [c for c in graph.strongly_connected_components() if len(c) > 1]
    if len(graph.vertices) <= max_vertices:
        all_cycles = enumerate_cycles(graph, max_vertices)
    else:
        all_cycles = None
    groups = []
    for comp in nontrivial:
        members = frozenset(comp)
        if all_cycles is None:
            groups.append(Cyclegroup(members))
        else:
            groups.append(
                Cyclegroup(members, tuple(c for c in all_cycles if set(c.vertices) <= members))
            )
    return groups
