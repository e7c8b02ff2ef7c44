"""Text formats: .dg graphs, .sem linear models, and statement serialization.

A .dg file declares vertices first (declaration order is the canonical
order), then one `A -> B` line per edge. A .sem file extends that with
`coeff A -> B = value`, `var X = value` and `corr e_X e_Y = value` lines;
omitted variances default to 1. `#` starts a comment anywhere, files are
UTF-8, names match [A-Za-z_][A-Za-z0-9_]*.
"""
from __future__ import annotations

import json
import re
from typing import Iterable

from . import errors
from .graphs import DirectedGraph, build_graph
from .linear import LinearSEM
from .separation import IndependenceStatement

_VERTEX_LINE = re.compile(r"vertex\s+([A-Za-z_][A-Za-z0-9_]*)")
_EDGE_LINE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)")
_COEFF_LINE = re.compile(
    r"coeff\s+([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)"
)
_VAR_LINE = re.compile(r"var\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)")
_CORR_LINE = re.compile(r"corr\s+(\S+)\s+(\S+)\s*=\s*(\S+)")


def _content_lines(text: str):
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line


def _number(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise errors.ParseError(f"expected a number, got {token!r}", line_no) from None


def parse_graph(text: str) -> DirectedGraph:
    vertices: list[str] = []
    edges: list[tuple[str, str]] = []
    for line_no, line in _content_lines(text):
        if m := _VERTEX_LINE.fullmatch(line):
            if edges:
                raise errors.ParseError("vertex declarations must precede edges", line_no)
            vertices.append(m.group(1))
        elif m := _EDGE_LINE.fullmatch(line):
            edges.append((m.group(1), m.group(2)))
        else:
            raise errors.ParseError(f"unrecognised directive: {line!r}", line_no)
    return build_graph(vertices, edges)


def format_graph(graph: DirectedGraph) -> str:
    lines = [f"vertex {v}" for v in graph.vertices]
    key = lambda e: (graph.index[e[0]], graph.index[e[1]])
    lines += [f"{t} -> {h}" for t, h in sorted(graph.edges, key=key)]
    return "\n".join(lines) + "\n"


def _error_term(token: str, known: set[str], line_no: int) -> str:
    """Resolve `e_X` or `eX` to the vertex X whose error term it names."""
    for prefix in ("e_", "e"):
        if token.startswith(prefix) and token[len(prefix):] in known:
            return token[len(prefix):]
    raise errors.ParseError(f"{token!r} does not name the error term of a declared vertex", line_no)


def parse_linear_sem(text: str) -> LinearSEM:
    vertices: list[str] = []
    edges: list[tuple[str, str]] = []
    coeff: dict[tuple[str, str], float] = {}
    variance: dict[str, float] = {}
    corr: dict[tuple[str, str], float] = {}
    past_vertices = False
    for line_no, line in _content_lines(text):
        if m := _VERTEX_LINE.fullmatch(line):
            if past_vertices:
                raise errors.ParseError("vertex declarations must precede other lines", line_no)
            vertices.append(m.group(1))
            continue
        past_vertices = True
        if m := _COEFF_LINE.fullmatch(line):
            key = (m.group(1), m.group(2))
            if key in coeff:
                raise errors.ParseError(f"coefficient for {key[0]} -> {key[1]} given twice", line_no)
            coeff[key] = _number(m.group(3), line_no)
        elif m := _VAR_LINE.fullmatch(line):
            if m.group(1) in variance:
                raise errors.ParseError(f"variance for {m.group(1)} given twice", line_no)
            variance[m.group(1)] = _number(m.group(2), line_no)
        elif m := _CORR_LINE.fullmatch(line):
            known = set(vertices)
            pair = (_error_term(m.group(1), known, line_no), _error_term(m.group(2), known, line_no))
            corr[pair] = _number(m.group(3), line_no)
        elif m := _EDGE_LINE.fullmatch(line):
            edges.append((m.group(1), m.group(2)))
        else:
            raise errors.ParseError(f"unrecognised directive: {line!r}", line_no)

    graph = build_graph(vertices, edges)
    for edge in sorted(graph.edges):
        if edge not in coeff:
            raise errors.ParseError(f"no coefficient for edge {edge[0]} -> {edge[1]}")
    for extra in sorted(set(coeff) - set(graph.edges)):
        raise errors.ParseError(f"coefficient for undeclared edge {extra[0]} -> {extra[1]}")
    for v in vertices:
        variance.setdefault(v, 1.0)
    return LinearSEM(graph, coeff, variance, corr)


def format_linear_sem(sem: LinearSEM) -> str:
    graph = sem.graph
    key = lambda e: (graph.index[e[0]], graph.index[e[1]])
    lines = [f"vertex {v}" for v in graph.vertices]
    lines += [f"{t} -> {h}" for t, h in sorted(graph.edges, key=key)]
    lines += [f"coeff {t} -> {h} = {sem.coeff[(t, h)]:.17g}" for t, h in sorted(graph.edges, key=key)]
    lines += [f"var {v} = {sem.error_variance[v]:.17g}" for v in graph.vertices]
    lines += [
        f"corr e_{a} e_{b} = {rho:.17g}"
        for (a, b), rho in sorted(sem.error_correlations.items(), key=lambda kv: key(kv[0]))
    ]
    return "\n".join(lines) + "\n"


def load_graph(path) -> DirectedGraph:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_graph(handle.read())


def load_linear_sem(path) -> LinearSEM:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_linear_sem(handle.read())


def format_statement(statement: IndependenceStatement, order: Iterable[str] | None = None) -> str:
    """Render as `X1 _||_ X2 | X3,X4`, omitting the bar when nothing is given."""
    if order is not None:
        rank = {v: i for i, v in enumerate(order)}
        sort = lambda names: sorted(names, key=rank.__getitem__)
    else:
        sort = sorted
    text = ",".join(sort(statement.x)) + " _||_ " + ",".join(sort(statement.y))
    if statement.z:
        text += " | " + ",".join(sort(statement.z))
    return text


def statement_to_json(statement: IndependenceStatement) -> dict:
    return {"x": sorted(statement.x), "y": sorted(statement.y), "z": sorted(statement.z)}


def statements_to_json(statements: Iterable[IndependenceStatement]) -> str:
    return json.dumps([statement_to_json(s) for s in statements], sort_keys=True)
