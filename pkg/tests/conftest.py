import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dcgmarkov import build_graph, catalog

settings.register_profile(
    "ci",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("ci")


# ---------------------------------------------------------------- fixtures

@pytest.fixture
def chain():
    return catalog.chain_graph()


@pytest.fixture
def feedback():
    return catalog.coupled_feedback_graph()


@pytest.fixture
def feedback_variant():
    return catalog.coupled_feedback_variant_graph()


@pytest.fixture
def bilinear():
    return catalog.bilinear_feedback_graph()


@pytest.fixture
def bilinear_model():
    return catalog.bilinear_feedback_model()


@pytest.fixture
def correlated_sem():
    return catalog.correlated_driver_sem()


# ---------------------------------------------------------------- strategies

def names_for(n):
    return tuple(f"V{i}" for i in range(n))


@st.composite
def directed_graphs(draw, min_vertices=1, max_vertices=6, acyclic=False):
    n = draw(st.integers(min_vertices, max_vertices))
    names = names_for(n)
    if acyclic:
        pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    else:
        pairs = [(a, b) for a in names for b in names if a != b]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return build_graph(names, edges)


@st.composite
def graph_and_triple(draw, min_vertices=2, max_vertices=6, acyclic=False):
    graph = draw(directed_graphs(min_vertices=min_vertices, max_vertices=max_vertices, acyclic=acyclic))
    names = list(graph.vertices)
    x = draw(st.sampled_from(names))
    y = draw(st.sampled_from([v for v in names if v != x]))
    rest = [v for v in names if v not in (x, y)]
    given = draw(st.sets(st.sampled_from(rest))) if rest else set()
    return graph, x, y, frozenset(given)


def rng_seeds(count, base):
    return [int(s) for s in np.random.SeedSequence(base).generate_state(count)]
