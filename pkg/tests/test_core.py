import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from termembed import oracles
from termembed.core import (DisconnectedGraphError, FiniteMetric, GraphError, TerminalSet, TreeSample,
                            WeightedGraph, close, dijkstra, distance_matrix, dominates, eval_distortion,
                            format_graph, induced_metric, leq, lightness, mst, nearest_in_set, parse_graph,
                            read_graph, shortest_path_metric, stretch, write_graph)

from conftest import connected_graphs, cycle, graphs_with_terminals, path_graph


# ---------------------------------------------------------------------------
# graph container


def test_graph_canonical_order_and_parallel_edges():
    g = WeightedGraph(3, [(2, 0, 5.0), (0, 1, 1.0), (0, 2, 3.0)])
    assert g.edges == ((0, 1, 1.0), (0, 2, 3.0))
    assert g.eid(2, 0) == 1 and g.weight(2, 0) == 3.0


@pytest.mark.parametrize("edges", [[(0, 0, 1.0)], [(0, 1, 0.0)], [(0, 1, -1.0)], [(0, 3, 1.0)],
                                   [(0, 1, math.inf)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(GraphError):
        WeightedGraph(3, edges)


def test_graph_capacities_all_or_nothing():
    with pytest.raises(GraphError):
        WeightedGraph(3, [(0, 1, 1.0, 2.0), (1, 2, 1.0)])
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)]).with_capacities([2.0, 3.0])
    assert g.capacities == (2.0, 3.0)


def test_require_connected_names_a_pair():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert not g.is_connected()
    with pytest.raises(DisconnectedGraphError):
        g.require_connected()


def test_close_and_leq_with_infinities():
    assert close(math.inf, math.inf)
    assert not close(math.inf, 1e300)
    assert not leq(math.inf, 5.0)
    assert leq(5.0, math.inf)
    assert leq(1.0 + 1e-12, 1.0)


# ---------------------------------------------------------------------------
# distances


def test_path_distance():
    d = distance_matrix(path_graph([1.0, 2.0]))
    assert d[0, 2] == 3.0


def test_single_vertex_metric():
    m = shortest_path_metric(WeightedGraph(1, []))
    assert m.d.shape == (1, 1) and m.d[0, 0] == 0.0


def test_unit_c4_opposite_vertices():
    d = distance_matrix(cycle(4))
    assert d[0, 2] == 2.0 == oracles.floyd_warshall(cycle(4))[0, 2]


def test_disconnected_metric_raises():
    with pytest.raises(DisconnectedGraphError):
        shortest_path_metric(WeightedGraph(3, [(0, 1, 1.0)]))


@given(connected_graphs(max_n=12))
def test_distance_matrix_matches_floyd_warshall(g):
    assert np.allclose(distance_matrix(g), oracles.floyd_warshall(g), rtol=1e-12)


@given(connected_graphs(max_n=12))
def test_shortest_path_metric_is_a_metric(g):
    m = shortest_path_metric(g)
    assert m.is_metric()
    assert np.array_equal(m.d, m.d.T)


def test_dijkstra_smallest_predecessor_tie_break():
    # two equal routes 0-1-3 and 0-2-3
    g = cycle(4)
    _, pred, _ = dijkstra(g.adj, g.weights, 0)
    g2 = WeightedGraph(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
    _, pred2, _ = dijkstra(g2.adj, g2.weights, 0)
    assert pred2[3] == 1
    assert pred[2] == 1


def test_dijkstra_multi_source_with_offsets():
    g = path_graph([1.0, 1.0, 1.0])
    dist, _, _ = dijkstra(g.adj, g.weights, [0, 3], init=[-1.0, 0.0])
    assert dist == {0: -1.0, 1: 0.0, 2: 1.0, 3: 0.0}


def test_finite_metric_validation():
    with pytest.raises(ValueError):
        FiniteMetric([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        FiniteMetric([[1, 1], [1, 0]])
    with pytest.raises(ValueError):
        FiniteMetric([[0, -1], [-1, 0]])


# ---------------------------------------------------------------------------
# induced metric and terminals


def test_induced_identity_and_submatrix():
    m = FiniteMetric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert np.array_equal(induced_metric(m, [0, 1, 2]).d, m.d)
    assert np.array_equal(induced_metric(m, [0, 2]).d, [[0, 2], [2, 0]])


def test_c6_alternating_points_pairwise_two():
    m = induced_metric(shortest_path_metric(cycle(6)), [0, 2, 4])
    fw = oracles.floyd_warshall(cycle(6))
    assert np.all(m.d[~np.eye(3, dtype=bool)] == 2.0)
    assert np.array_equal(m.d, fw[np.ix_([0, 2, 4], [0, 2, 4])])


def test_induced_out_of_range():
    with pytest.raises(IndexError):
        induced_metric(FiniteMetric(np.zeros((2, 2))), [0, 5])


def test_terminal_set_rules():
    with pytest.raises(ValueError):
        TerminalSet([])
    with pytest.raises(ValueError):
        TerminalSet([1, 1])
    with pytest.raises(ValueError):
        TerminalSet([4], n=3)
    with pytest.warns(UserWarning):
        TerminalSet([0, 1, 2], n=4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        TerminalSet([0, 1], n=4)
    assert list(TerminalSet([3, 1])) == [1, 3]


def test_nearest_in_set_smallest_id_on_ties():
    m = shortest_path_metric(path_graph([1.0, 1.0]))
    near, dist = nearest_in_set(m, [2, 0])
    assert near.tolist() == [0, 0, 2] and dist.tolist() == [0.0, 1.0, 0.0]


# ---------------------------------------------------------------------------
# distortion


@given(connected_graphs(max_n=10), st.sampled_from(["all", "terminal"]))
def test_identity_distortion_is_one(g, pairs):
    d = distance_matrix(g)
    assert eval_distortion(d, d, pairs, [0]).distortion == 1.0


def test_scaled_target_distortion_is_one():
    d = distance_matrix(cycle(5))
    rep = eval_distortion(d, 3 * d)
    assert rep.max_expansion == pytest.approx(3.0)
    assert rep.max_contraction == pytest.approx(1 / 3)
    assert rep.distortion == pytest.approx(1.0)
    assert stretch(d, 3 * d) == pytest.approx(3.0)


@given(connected_graphs(max_n=9))
def test_distortion_matches_oracle(g):
    t = mst(g)
    d = distance_matrix(g)
    got = eval_distortion(d, t).distortion
    assert got == pytest.approx(oracles.brute_force_distortion(d, oracles.tree_distances(g.n, t.edges)))


def test_terminal_pair_set_counts_pairs_touching_k():
    d = distance_matrix(cycle(6))
    rep = eval_distortion(d, d, "terminal", [0])
    assert rep.pairs == 5 and rep.pair_set_tag == "terminal-pairs"


def test_zero_source_distance_with_image_rejected():
    with pytest.raises(ValueError):
        eval_distortion(np.zeros((2, 2)), np.array([[0, 1], [1, 0.0]]))


def test_dominates():
    d = distance_matrix(cycle(4))
    assert dominates(2 * d, d) and not dominates(d / 2, d)


# ---------------------------------------------------------------------------
# MST and lightness


def test_mst_triangle():
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])
    assert [w for *_, w in mst(g).edges] == [1.0, 2.0]


def test_mst_of_tree_is_itself():
    g = path_graph([3.0, 1.0, 2.0])
    assert mst(g).edges == list(g.edges)


def test_lightness_trivial_cases():
    g = cycle(4)
    assert lightness(mst(g), g) == 1.0
    path = TreeSample(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    assert lightness(path, g) == 1.0


@given(connected_graphs(max_n=8))
def test_mst_weight_matches_enumeration(g):
    best = min(sum(g.edges[i][2] for i in ids) for ids in oracles.spanning_trees(g))
    assert mst(g).weight == pytest.approx(best)


def test_tree_sample_checks():
    t = TreeSample(3, [(0, 1, 1.0), (1, 2, 1.0)])
    assert t.is_tree() and t.path(0, 2) == [0, 1, 2]
    assert not TreeSample(3, [(0, 1, 1.0)]).is_tree()
    with pytest.raises(GraphError):
        TreeSample(3, [(0, 1, 1.0), (1, 2, 5.0)]).validate(path_graph([1.0, 1.0]))


@given(connected_graphs(max_n=10))
def test_tree_distances_match_bfs_oracle(g):
    t = mst(g)
    assert np.allclose(t.distance_matrix(), oracles.tree_distances(g.n, t.edges))


# ---------------------------------------------------------------------------
# text format


@given(graphs_with_terminals(max_n=8, caps=True))
def test_graph_text_round_trip(gt):
    g, terms = gt
    g2, t2 = parse_graph(format_graph(g, terms, ["note"]))
    assert g2.edges == g.edges and g2.capacities == g.capacities and list(t2) == list(terms)


def test_graph_file_round_trip(tmp_path):
    g = cycle(5)
    write_graph(tmp_path / "g.txt", g)
    g2, terms = read_graph(tmp_path / "g.txt")
    assert g2.edges == g.edges and terms is None


@pytest.mark.parametrize("text", ["", "3 1 0\n", "3 1 1\n", "2 1 0\n0 1\n", "x y z\n", "2 1 2\n0\n0 1 1\n"])
def test_parse_graph_errors(text):
    with pytest.raises((GraphError, ValueError)):
        parse_graph(text)
