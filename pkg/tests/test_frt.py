import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from termembed import frt, oracles
from termembed.core import FiniteMetric, TerminalSet, shortest_path_metric
from termembed.generators import gen_random

from conftest import graphs_with_terminals


def test_single_point():
    t = frt.sample_frt(FiniteMetric([[0.0]]), TerminalSet([0]), 0)
    assert t.n == 1 and t.size == 1
    assert frt.ultrametric_distance(t, 0, 0) == 0.0


def test_two_points_unit_distance():
    # diameter 1 <= 2**0, so the root sits at level 0 and the pair splits right below it
    m = FiniteMetric([[0, 1], [1, 0]])
    for seed in range(5):
        t = frt.sample_frt(m, TerminalSet([0]), seed)
        assert t.meta["delta"] == 0
        assert t.label[t.root] == 1.0
        assert frt.ultrametric_distance(t, 0, 1) == 1.0


def _first_split_level(levels, pts_index, a, b):
    for lev, cl, _ in levels:
        if cl[pts_index[a]] != cl[pts_index[b]]:
            return lev
    raise AssertionError("pair never separated")


@given(graphs_with_terminals(min_n=2, max_n=12), st.integers(0, 2 ** 32))
def test_pair_cut_at_level_i_gets_two_to_the_i_plus_one(gt, seed):
    g, terms = gt
    m = shortest_path_metric(g)
    t = frt.sample_frt(m, terms, seed)
    pts = t.meta["points"]
    idx = {p: j for j, p in enumerate(pts)}
    scale = t.meta["scale"]
    d = t.distance_matrix()
    for a in pts:
        for b in pts:
            if a < b:
                lev = _first_split_level(t.meta["levels"], idx, a, b)
                assert d[a, b] == pytest.approx(2.0 ** (lev + 1) * scale)


@given(graphs_with_terminals(min_n=1, max_n=14), st.integers(0, 2 ** 32))
def test_sample_checks_property(gt, seed):
    g, terms = gt
    m = shortest_path_metric(g)
    t = frt.sample_frt(m, terms, seed)
    t.validate()
    chk = frt.check_frt_sample(t, m, terms)
    assert chk.ok, chk
    assert set(t.meta["perm"][:len(terms)]) == set(terms)
    # labels never increase from root to leaf
    for x in range(t.size):
        p = t.parent[x]
        if p >= 0:
            assert t.label[p] >= t.label[x]


def test_zero_distance_points_share_a_parent():
    m = FiniteMetric([[0, 0, 2], [0, 0, 2], [2, 2, 0]])
    t = frt.sample_frt(m, TerminalSet([0]), 1)
    assert t.parent[0] == t.parent[1]
    assert frt.ultrametric_distance(t, 0, 1) == min(t.label[t.n:])
    assert frt.check_frt_sample(t, m, TerminalSet([0])).ok


# ---------------------------------------------------------------------------
# ultrametric queries


def test_siblings_under_root():
    t = frt.UltrametricTree(3, [3, 3, 3, -1], [0, 0, 0, 8.0])
    assert frt.ultrametric_distance(t, 0, 2) == 8.0


def test_unknown_leaf():
    t = frt.UltrametricTree(2, [2, 2, -1], [0, 0, 1.0])
    with pytest.raises(KeyError):
        frt.ultrametric_distance(t, 5, 5)


def _random_ultrametric(n, seed):
    rng = np.random.default_rng(seed)
    nodes = list(range(n))
    parent = [-1] * n
    label = [0.0] * n
    height = [0] * n
    while len(nodes) > 1:
        a, b = sorted(rng.choice(len(nodes), 2, replace=False).tolist(), reverse=True)
        x, y = nodes.pop(a), nodes.pop(b)
        z = len(parent)
        parent[x] = parent[y] = z
        parent.append(-1)
        h = max(height[x], height[y]) + 1
        height.append(h)
        label.append(2.0 ** h)
        nodes.append(z)
    return frt.UltrametricTree(n, parent, label)


@pytest.mark.parametrize("seed", range(5))
def test_ultrametric_distance_matches_naive_lca(seed):
    t = _random_ultrametric(10, seed)
    d = t.distance_matrix()
    for a in range(10):
        for b in range(10):
            want = 0.0 if a == b else t.label[oracles.naive_lca(t.parent, a, b)]
            assert frt.ultrametric_distance(t, a, b) == want == d[a, b]


def test_ultrametric_input_has_bounded_stretch():
    t = _random_ultrametric(12, 7)
    m = FiniteMetric(t.distance_matrix())
    rep = frt.estimate_expected_distortion(m, TerminalSet([0, 3, 6]), 50, 0)
    assert rep.all_checks_ok
    assert 1.0 <= rep.all_pairs.mean <= rep.all_pairs.envelope


def test_format_parse_round_trip():
    g, terms = gen_random("gnp", {"n": 15, "p": 0.3, "k": 3}, np.random.default_rng(0))
    t = frt.sample_frt(shortest_path_metric(g), terms, 3)
    back = frt.parse_ultrametric(frt.format_ultrametric(t))
    assert np.array_equal(back.distance_matrix(), t.distance_matrix())


# ---------------------------------------------------------------------------
# statistics


def test_envelopes():
    term, allp = frt.frt_envelopes(20, 4)
    assert term == pytest.approx(16 * (math.log(4) + 1))
    assert allp == pytest.approx(16 * (math.log(4) + math.log(16) + 2))
    assert frt.harmonic(4) == pytest.approx(1 + 1 / 2 + 1 / 3 + 1 / 4)
    for k in range(1, 50):
        assert 16 * frt.harmonic(k) <= frt.frt_envelopes(100, k)[0]


def test_all_terminals_classes_coincide():
    g, _ = gen_random("gnp", {"n": 8, "p": 0.5}, np.random.default_rng(1))
    rep = frt.estimate_expected_distortion(shortest_path_metric(g), TerminalSet(range(8)), 20, 0)
    assert rep.terminal.mean == rep.all_pairs.mean


def test_estimate_requires_samples():
    with pytest.raises(ValueError):
        frt.estimate_expected_distortion(FiniteMetric([[0, 1], [1, 0]]), TerminalSet([0]), 0)


def test_report_serializes():
    g, terms = gen_random("grid", {"rows": 3, "cols": 4, "k": 2}, np.random.default_rng(2))
    rep = frt.estimate_expected_distortion(shortest_path_metric(g), terms, 10, 0)
    d = rep.as_dict()
    assert d["samples"] == 10 and d["checks_ok"] and d["terminal_pairs"]["pass"]


def test_custom_sampler_failure_is_reported():
    m = FiniteMetric([[0, 4], [4, 0]])

    def bad(m, terms, rng):
        t = frt.sample_frt(m, terms, rng)
        t.label[t.root] = 1.0
        return t
    rep = frt.estimate_expected_distortion(m, TerminalSet([0]), 3, 0, sampler=bad)
    assert not rep.all_checks_ok and len(rep.failed_checks) == 3


# ---------------------------------------------------------------------------
# Steiner point removal


def test_remove_steiner_two_leaves():
    t = frt.UltrametricTree(2, [2, 2, -1], [0, 0, 2.0])
    out = frt.remove_steiner(t)
    assert out.edges == [(0, 1, 2.0)] and out.kind == "dominating"


def test_remove_steiner_star():
    big_l = 4.0
    t = frt.UltrametricTree(5, [5] * 5 + [-1], [0.0] * 5 + [big_l])
    out = frt.remove_steiner(t)
    assert out.is_tree()
    assert {u for u, v, _ in out.edges} == {0}
    d = out.distance_matrix()
    off = d[~np.eye(5, dtype=bool)]
    assert np.all((off >= big_l) & (off <= 2 * big_l))


@pytest.mark.parametrize("seed", range(5))
def test_remove_steiner_random_twelve(seed):
    g, terms = gen_random("gnp", {"n": 12, "p": 0.35, "k": 3}, np.random.default_rng(seed))
    m = shortest_path_metric(g)
    t = frt.sample_frt(m, terms, seed)
    out = frt.remove_steiner(t)
    assert out.is_tree()
    dt = t.distance_matrix()
    do = oracles.tree_distances(12, out.edges)
    assert np.all(do >= dt * (1 - 1e-12))
    assert np.all(do <= 4 * dt * (1 + 1e-12))
    assert np.all(do >= m.d * (1 - 1e-12))
