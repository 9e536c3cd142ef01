import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from termembed import oracles, spanners
from termembed.core import FiniteMetric, TerminalSet, induced_metric, parse_graph, shortest_path_metric

from conftest import connected_graphs, cycle, graphs_with_terminals, grid


def _metric_from_points(n, seed):
    x = np.random.default_rng(seed).uniform(0, 10, (n, 2))
    return FiniteMetric(np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1)), check=False)


def test_greedy_t1_is_exact():
    m = _metric_from_points(12, 0)
    sp = spanners.greedy_spanner(m, 1)
    assert np.allclose(sp.distance_matrix(), m.d)


def test_greedy_uniform_metric():
    m = FiniteMetric(1.0 - np.eye(6))
    for t in (1, 2, 3):
        sp = spanners.greedy_spanner(m, t)
        d = sp.distance_matrix()
        assert np.all(d <= (2 * t - 1) * m.d + 1e-12)
        assert all(w == 1.0 for *_, w in sp.edges)
    # t >= 2 needs only a connected round: a star from point 0
    assert spanners.greedy_spanner(m, 2).size == 5


def test_greedy_random_metric_t2():
    m = _metric_from_points(32, 1)
    sp = spanners.greedy_spanner(m, 2)
    d = oracles.floyd_warshall(sp.graph())
    assert np.all(d <= 3 * m.d * (1 + 1e-9) + 1e-12)
    assert sp.size < 32 * 31 // 2


def test_greedy_rejects_small_t():
    with pytest.raises(ValueError):
        spanners.greedy_spanner(FiniteMetric(np.zeros((1, 1))), 0.5)


@given(connected_graphs(min_n=2, max_n=12), st.sampled_from([1, 1.5, 2, 3]))
def test_greedy_stretch_property(g, t):
    m = shortest_path_metric(g)
    d = oracles.floyd_warshall(spanners.greedy_spanner(m, t).graph())
    assert np.all(d <= (2 * t - 1) * m.d * (1 + 1e-9) + 1e-12)


def test_metric_spanner_star_edges():
    m = shortest_path_metric(cycle(8))
    terms = TerminalSet([0, 4])
    sp = spanners.terminal_metric_spanner(m, terms, 1)
    touched = {u for u, v, _ in sp.edges} | {v for u, v, _ in sp.edges}
    assert touched == set(range(8))
    assert sp.meta["star_edges"] == 6
    # no star edge is added for a terminal
    stars = [(u, v) for u, v, _ in sp.edges if (u, v) != (0, 4)]
    assert all((u in terms) != (v in terms) for u, v in stars)


def test_metric_spanner_single_terminal_is_exact_star():
    m = shortest_path_metric(grid(3, 3))
    sp = spanners.terminal_metric_spanner(m, TerminalSet([4]), 2)
    d = sp.distance_matrix()
    assert np.allclose(d[4], m.d[4]) and sp.size == 8


def test_metric_spanner_c8_exhaustive():
    m = shortest_path_metric(cycle(8))
    terms = TerminalSet([0, 2, 4, 6])
    sp = spanners.terminal_metric_spanner(m, terms, 1)
    d = oracles.floyd_warshall(sp.graph())
    for u in terms:
        for x in range(8):
            if x != u:
                assert d[u, x] <= 3 * m.d[u, x] + 1e-12


# ---------------------------------------------------------------------------
# preserver


def test_preserver_empty_and_single_pair():
    g = cycle(6)
    assert spanners.pairwise_preserver(g, []).size == 0
    sp = spanners.pairwise_preserver(g, [(0, 2)])
    assert sp.size == 2 and sp.distance_matrix()[0, 2] == 2


def test_preserver_grid():
    g = grid(5, 5)
    rng = np.random.default_rng(0)
    pairs = []
    while len(pairs) < 6:
        u, v = sorted(rng.choice(25, 2, replace=False).tolist())
        if (u, v) not in pairs:
            pairs.append((u, v))
    sp = spanners.pairwise_preserver(g, pairs)
    dg = oracles.floyd_warshall(g)
    dp = oracles.floyd_warshall(sp.graph())
    assert all(dp[u, v] == dg[u, v] for u, v in pairs)
    assert sp.meta["size_target"] == 25 + 5 * 6
    assert sp.size <= 55


def test_preserver_rejects_self_pair():
    with pytest.raises(ValueError):
        spanners.pairwise_preserver(cycle(4), [(1, 1)])


@given(connected_graphs(min_n=2, max_n=10, integer=True), st.data())
def test_preserver_exact_property(g, data):
    pairs = data.draw(st.lists(st.tuples(st.integers(0, g.n - 1), st.integers(0, g.n - 1))
                               .filter(lambda p: p[0] != p[1]), max_size=6))
    dg = oracles.floyd_warshall(g)
    for prune in (True, False):
        sp = spanners.pairwise_preserver(g, pairs, prune)
        dp = oracles.floyd_warshall(sp.graph())
        assert all(dp[u, v] == dg[u, v] for u, v in pairs)
        assert all(g.has_edge(u, v) for u, v, _ in sp.edges)


# ---------------------------------------------------------------------------
# terminal graph spanner


def test_spanner_all_terminals_reduces_to_preserver():
    g = grid(3, 4)
    terms = TerminalSet(range(12))
    for t in (1, 2):
        sp = spanners.terminal_graph_spanner(g, terms, t)
        assert spanners.terminal_stretch(oracles.floyd_warshall(g), sp.distance_matrix(), terms) <= 2 * t - 1


def test_spanner_c10_three_terminals():
    g = cycle(10)
    terms = TerminalSet([0, 3, 7])
    sp = spanners.terminal_graph_spanner(g, terms, 2)
    dg = oracles.floyd_warshall(g)
    ds = oracles.floyd_warshall(sp.graph())
    assert max(ds[u, x] / dg[u, x] for u in terms for x in range(10) if x != u) <= 7
    assert sp.meta["stretch_bound"] == 7


@given(graphs_with_terminals(min_n=2, max_n=12), st.sampled_from([1, 2, 3]))
def test_terminal_spanner_stretch_property(gt, t):
    g, terms = gt
    sp = spanners.terminal_graph_spanner(g, terms, t)
    dg = oracles.floyd_warshall(g)
    assert spanners.terminal_stretch(dg, oracles.floyd_warshall(sp.graph()), terms) <= (4 * t - 1) * (1 + 1e-9)
    assert all(g.has_edge(u, v) and g.weight(u, v) == w for u, v, w in sp.edges)
    assert sp.graph().is_connected()


def test_spanner_text_output():
    sp = spanners.terminal_graph_spanner(cycle(6), TerminalSet([0, 3]), 1)
    g2, terms = parse_graph(sp.to_text(TerminalSet([0, 3])))
    assert g2.edges == sp.graph().edges and list(terms) == [0, 3]


def test_terminal_stretch_skips_zero_pairs():
    d = np.array([[0, 2.0], [2.0, 0]])
    assert spanners.terminal_stretch(d, 2 * d, [0]) == 2.0
    assert spanners.terminal_stretch(np.zeros((1, 1)), np.zeros((1, 1)), [0]) == 1.0
