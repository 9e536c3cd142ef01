import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from termembed.core import TerminalSet, WeightedGraph
from termembed.generators import gen_random

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def cycle(n: int, w: float = 1.0) -> WeightedGraph:
    return WeightedGraph(n, [(i, (i + 1) % n, w) for i in range(n)])


def path_graph(ws) -> WeightedGraph:
    return WeightedGraph(len(ws) + 1, [(i, i + 1, w) for i, w in enumerate(ws)])


def grid(rows: int, cols: int) -> WeightedGraph:
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if i + 1 < rows:
                edges.append((v, v + cols, 1.0))
    return WeightedGraph(rows * cols, edges)


@pytest.fixture
def c4():
    return cycle(4)


@pytest.fixture
def rand_graph():
    """Factory: connected gnp instance with uniform weights and k terminals."""
    def make(n=12, k=3, seed=0, p=None, **extra):
        params = {"n": n, "p": p if p is not None else min(1.0, 3.0 / n), "k": k, **extra}
        return gen_random("gnp", params, np.random.default_rng(seed))
    return make


@st.composite
def connected_graphs(draw, min_n=2, max_n=10, integer=False, caps=False):
    """Random spanning tree plus random chords; weights positive."""
    n = draw(st.integers(min_n, max_n))
    wt = st.integers(1, 9).map(float) if integer else st.floats(0.5, 10.0, allow_nan=False)
    edges = {}
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        edges[(u, v)] = draw(wt)
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    for u, v in extra:
        if u != v:
            edges[(min(u, v), max(u, v))] = draw(wt)
    if caps:
        rows = [(u, v, w, float(draw(st.integers(1, 5)))) for (u, v), w in edges.items()]
    else:
        rows = [(u, v, w) for (u, v), w in edges.items()]
    return WeightedGraph(n, rows)


@st.composite
def graphs_with_terminals(draw, min_n=2, max_n=10, integer=False, caps=False, min_k=1):
    g = draw(connected_graphs(min_n=max(min_n, min_k), max_n=max_n, integer=integer, caps=caps))
    ids = draw(st.lists(st.integers(0, g.n - 1), min_size=min_k, max_size=g.n, unique=True))
    return g, TerminalSet(sorted(ids))
