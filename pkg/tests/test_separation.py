import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import directed_graphs, graph_and_triple
from dcgmarkov import (
    IndependenceStatement,
    UndirectedGraph,
    build_graph,
    check_local_global_gap,
    collapse,
    d_separated,
    d_separated_path,
    enumerate_entailed_ci,
    errors,
    local_markov_statements,
    markov_equivalent,
    moralize,
    useparated,
)


def stmt(x, y, z=()):
    return IndependenceStatement(frozenset(x), frozenset(y), frozenset(z))


# ---------------------------------------------------------------- types

def test_statement_validation():
    with pytest.raises(errors.EmptyVertexSet):
        stmt([], ["A"])
    with pytest.raises(errors.NonDisjointSets):
        stmt(["A"], ["A"])
    with pytest.raises(errors.NonDisjointSets):
        stmt(["A"], ["B"], ["B"])


def test_undirected_graph_validation():
    with pytest.raises(errors.UnknownEndpoint):
        UndirectedGraph(("A",), frozenset({("A", "B")}))
    with pytest.raises(errors.SelfLoop):
        UndirectedGraph(("A", "B"), frozenset({("A", "A")}))


# ---------------------------------------------------------------- moralize

def test_moralize_feedback(feedback):
    moral = moralize(feedback)
    assert moral.adjacency == {
        ("X1", "X3"),
        ("X2", "X4"),
        ("X3", "X4"),
        ("X1", "X4"),  # co-parents of X3
        ("X2", "X3"),  # co-parents of X4
    }


def test_moralize_edgeless():
    g = build_graph(["A", "B"], [])
    assert moralize(g).adjacency == frozenset()


def test_moralize_bilinear(bilinear):
    assert moralize(bilinear).adjacency == {
        ("W", "X"),
        ("Y", "Z"),
        ("W", "Z"),
        ("W", "Y"),  # co-parents of Z
        ("X", "Z"),  # co-parents of W
    }


# ---------------------------------------------------------------- useparated

def test_useparated_path_graph():
    h = UndirectedGraph(("A", "B", "C"), frozenset({("A", "B"), ("B", "C")}))
    assert useparated(h, {"A"}, {"C"}, {"B"})
    assert not useparated(h, {"A"}, {"C"}, set())


def test_useparated_moralized_bilinear(bilinear):
    assert useparated(moralize(bilinear), {"X"}, {"Y"}, {"Z", "W"})


def test_useparated_validation():
    h = UndirectedGraph(("A", "B"), frozenset({("A", "B")}))
    with pytest.raises(errors.NonDisjointSets):
        useparated(h, {"A"}, {"A"}, set())
    with pytest.raises(errors.UnknownVertex):
        useparated(h, {"A"}, {"Q"}, set())
    with pytest.raises(errors.EmptyVertexSet):
        useparated(h, set(), {"B"}, set())


# ---------------------------------------------------------------- d-separation

def test_d_separated_feedback_examples(feedback):
    assert d_separated(feedback, {"X1"}, {"X2"}, set())
    assert d_separated(feedback, {"X1"}, {"X2"}, {"X3", "X4"})
    assert not d_separated(feedback, {"X4"}, {"X1"}, {"X2", "X3"})


def test_d_separated_bilinear_example(bilinear):
    assert d_separated(bilinear, {"X"}, {"Y"}, {"Z", "W"})


def test_d_separated_path_textbook_cases(chain):
    assert d_separated_path(chain, {"X"}, {"Z"}, {"Y"})
    collider = build_graph(["A", "B", "C"], [("A", "C"), ("B", "C")])
    assert d_separated_path(collider, {"A"}, {"B"}, set())
    assert not d_separated_path(collider, {"A"}, {"B"}, {"C"})


def test_d_separated_path_matches_moral_on_examples(feedback, bilinear):
    cases = [
        (feedback, {"X1"}, {"X2"}, set()),
        (feedback, {"X1"}, {"X2"}, {"X3", "X4"}),
        (feedback, {"X4"}, {"X1"}, {"X2", "X3"}),
        (bilinear, {"X"}, {"Y"}, {"Z", "W"}),
    ]
    for g, x, y, z in cases:
        assert d_separated_path(g, x, y, z) == d_separated(g, x, y, z)


@given(graph_and_triple(max_vertices=5))
def test_path_oracle_agrees_with_moral_method(case):
    g, x, y, z = case
    assert d_separated(g, {x}, {y}, z) == d_separated_path(g, {x}, {y}, z)


@given(graph_and_triple(max_vertices=6))
def test_d_separation_symmetry(case):
    g, x, y, z = case
    assert d_separated(g, {x}, {y}, z) == d_separated(g, {y}, {x}, z)


@given(directed_graphs(min_vertices=3, max_vertices=6), st.data())
@settings(max_examples=60)
def test_decomposition(g, data):
    names = list(g.vertices)
    x = data.draw(st.sampled_from(names))
    pool = [v for v in names if v != x]
    y = data.draw(st.sampled_from(pool))
    pool = [v for v in pool if v != y]
    w = data.draw(st.sampled_from(pool))
    rest = [v for v in pool if v != w]
    z = data.draw(st.sets(st.sampled_from(rest))) if rest else set()
    if d_separated(g, {x}, {y, w}, z):
        assert d_separated(g, {x}, {y}, z)


# ---------------------------------------------------------------- collapse

def test_collapse_dag_is_identity(chain):
    assert collapse(chain) == chain


def test_collapse_bilinear(bilinear):
    collapsed = collapse(bilinear)
    assert collapsed.is_acyclic()
    assert collapsed.edges == {
        ("Z", "W"),
        ("X", "Z"), ("X", "W"),
        ("Y", "Z"), ("Y", "W"),
    }


def test_collapse_feedback(feedback):
    collapsed = collapse(feedback)
    assert collapsed.edges == {
        ("X3", "X4"),
        ("X1", "X3"), ("X1", "X4"),
        ("X2", "X3"), ("X2", "X4"),
    }


def test_collapse_rejects_wrong_order(feedback):
    with pytest.raises(errors.VertexSetMismatch):
        collapse(feedback, order=("X1", "X2"))


@given(directed_graphs(min_vertices=1, max_vertices=6))
def test_collapse_always_acyclic(g):
    assert collapse(g).is_acyclic()


@given(directed_graphs(min_vertices=2, max_vertices=5))
@settings(max_examples=50)
def test_collapse_separations_contained_in_original(g):
    collapsed = set(enumerate_entailed_ci(collapse(g)))
    original = set(enumerate_entailed_ci(g))
    assert collapsed <= original


@given(directed_graphs(min_vertices=2, max_vertices=5), st.data())
@settings(max_examples=40)
def test_collapse_numbering_is_irrelevant(g, data):
    shuffled = data.draw(st.permutations(list(g.vertices)))
    a = set(enumerate_entailed_ci(collapse(g)))
    b = set(enumerate_entailed_ci(collapse(g, order=shuffled)))
    assert a == b


# ---------------------------------------------------------------- Markov statements

def test_local_markov_chain(chain):
    statements = local_markov_statements(chain)
    assert stmt(["X"], ["Z"], ["Y"]) in statements


def test_local_markov_feedback(feedback):
    statements = local_markov_statements(feedback)
    assert stmt(["X4"], ["X1"], ["X2", "X3"]) in statements
    assert stmt(["X3"], ["X2"], ["X1", "X4"]) in statements


def test_local_markov_complete_dag_empty():
    g = build_graph(["A", "B", "C"], [("A", "B"), ("A", "C"), ("B", "C")])
    assert local_markov_statements(g) == []


def test_gap_feedback(feedback):
    gap = set(check_local_global_gap(feedback))
    assert stmt(["X4"], ["X1"], ["X2", "X3"]) in gap
    assert stmt(["X3"], ["X2"], ["X1", "X4"]) in gap


def test_gap_edgeless_empty():
    assert check_local_global_gap(build_graph(["A", "B"], [])) == []


@given(directed_graphs(min_vertices=1, max_vertices=6, acyclic=True))
def test_gap_empty_on_dags(g):
    assert check_local_global_gap(g) == []


# ---------------------------------------------------------------- enumeration and equivalence

def test_enumerate_feedback_exactly_two(feedback):
    statements = enumerate_entailed_ci(feedback)
    assert statements == [
        stmt(["X1"], ["X2"]),
        stmt(["X1"], ["X2"], ["X3", "X4"]),
    ]


def test_enumerate_edgeless_three_vertices():
    # 3 unordered pairs, each with 2 conditioning subsets
    g = build_graph(["A", "B", "C"], [])
    assert len(enumerate_entailed_ci(g)) == 6


def test_enumerate_bilinear_includes_both(bilinear):
    statements = set(enumerate_entailed_ci(bilinear))
    assert stmt(["X"], ["Y"], ["Z", "W"]) in statements
    assert stmt(["X"], ["Y"]) in statements


def test_enumerate_cap():
    g = build_graph([f"N{i}" for i in range(9)], [])
    with pytest.raises(errors.GraphTooLarge):
        enumerate_entailed_ci(g)


def test_markov_equivalent_feedback_variant(feedback, feedback_variant):
    assert markov_equivalent(feedback, feedback_variant)
    assert markov_equivalent(feedback, feedback)


def test_markov_equivalent_chain_vs_collider():
    chain3 = build_graph(["A", "B", "C"], [("A", "B"), ("B", "C")])
    collider = build_graph(["A", "B", "C"], [("A", "B"), ("C", "B")])
    assert not markov_equivalent(chain3, collider)


def test_markov_equivalent_requires_same_vertices(feedback, chain):
    with pytest.raises(errors.VertexSetMismatch):
        markov_equivalent(feedback, chain)
