import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from termembed import lp, oracles
from termembed.core import FiniteMetric, TerminalSet, eval_distortion, induced_metric, shortest_path_metric

from conftest import connected_graphs, cycle, graphs_with_terminals, path_graph


def test_two_points_non_expansive():
    m = FiniteMetric([[0, 3], [3, 0]])
    for seed in range(10):
        pts, _ = lp.bourgain_embed(m, 2.0, seed)
        assert pts.dist(0, 1) <= 3 + 1e-12
        assert pts.dist(0, 1) > 0


def test_bourgain_needs_two_points():
    with pytest.raises(ValueError):
        lp.bourgain_embed(FiniteMetric([[0.0]]), 2.0, 0)


@given(connected_graphs(min_n=2, max_n=12), st.sampled_from([1.0, 2.0, 3.0]), st.integers(0, 2 ** 32))
def test_frechet_coordinates_one_lipschitz(g, p, seed):
    m = shortest_path_metric(g)
    pts, fmap = lp.bourgain_embed(m, p, seed)
    raw = pts.vectors * fmap.scale
    for c in range(raw.shape[1]):
        diff = np.abs(raw[:, c][:, None] - raw[:, c][None, :])
        assert np.all(diff <= m.d + 1e-9)
    assert np.all(pts.distance_matrix() <= m.d * (1 + 1e-9) + 1e-12)
    assert all(a.size for a in fmap.sets)


def test_bourgain_dimension():
    m = shortest_path_metric(cycle(16))
    pts, fmap = lp.bourgain_embed(m, 2.0, 0, c1=2.0)
    assert fmap.t == pts.dim == 4 * math.ceil(2 * 4)


def test_uniform_sixteen_distortion_envelope():
    m = FiniteMetric(1.0 - np.eye(16))
    worst = 0.0
    for seed in range(20):
        pts, _ = lp.bourgain_embed(m, 2.0, seed)
        got = eval_distortion(m, pts).distortion
        assert got == pytest.approx(oracles.brute_force_distortion(m.d, pts.distance_matrix()))
        worst = max(worst, got)
    assert worst <= 8 * math.log(16)


def test_embedded_points_validation():
    with pytest.raises(ValueError):
        lp.EmbeddedPoints(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        lp.EmbeddedPoints(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        lp.EmbeddedPoints(np.zeros((2, 1)), p=0.5)


# ---------------------------------------------------------------------------
# terminal transform


def _isometric_pair_base(m, terms):
    a, b = list(terms)
    return lp.EmbeddedPoints(np.array([[0.0], [m.d[a, b]]]), 2.0)


def test_transform_last_coordinate():
    # path 0-1-2-3-4 with unit edges, terminals {0, 4}: vertex 2 is at distance 2 from both
    g = path_graph([1.0] * 4)
    m = shortest_path_metric(g)
    terms = TerminalSet([0, 4])
    out = lp.terminal_lp_transform(m, terms, _isometric_pair_base(m, terms))
    assert out.dim == 2
    assert out.vectors[0, -1] == 0.0 and out.vectors[4, -1] == 0.0
    assert out.vectors[2, -1] == 2.0
    # nearest-terminal tie at vertex 2 goes to the smaller id
    assert out.meta["nearest_terminal"][2] == 0
    assert np.array_equal(out.vectors[2, :-1], out.vectors[0, :-1])


def test_transform_isometric_base_bound_sqrt10():
    for seed in range(10):
        g, terms = oracles_free_instance(seed)
        m = shortest_path_metric(g)
        out = lp.terminal_lp_transform(m, terms, _isometric_pair_base(m, terms))
        got = eval_distortion(m, out, "terminal", terms).distortion
        assert got <= math.sqrt(10) * (1 + 1e-9)
    assert lp.transform_bound(1.0, 2.0) == pytest.approx(math.sqrt(10))
    assert lp.transform_bound(1.0, 1.0) == pytest.approx(3.0)


def oracles_free_instance(seed):
    from termembed.generators import gen_random
    return gen_random("tree+chords", {"n": 14, "chords": 5, "k": 2}, np.random.default_rng(seed))


def test_transform_rejects_contractive_base():
    m = shortest_path_metric(path_graph([1.0, 1.0]))
    terms = TerminalSet([0, 2])
    base = lp.EmbeddedPoints(np.array([[0.0], [1.0]]), 2.0)
    with pytest.raises(ValueError, match=r"\(0, 2\)"):
        lp.terminal_lp_transform(m, terms, base)


def test_transform_row_count_checked():
    m = shortest_path_metric(path_graph([1.0, 1.0]))
    with pytest.raises(ValueError):
        lp.terminal_lp_transform(m, TerminalSet([0, 2]), lp.EmbeddedPoints(np.zeros((3, 1))))


@given(graphs_with_terminals(min_n=3, max_n=10, min_k=2), st.sampled_from([1.0, 2.0]), st.integers(0, 2 ** 32))
def test_transform_bound_property(gt, p, seed):
    g, terms = gt
    m = shortest_path_metric(g)
    mk = induced_metric(m, terms)
    base = lp.make_noncontractive(lp.bourgain_embed(mk, p, seed)[0], mk)
    alpha = eval_distortion(mk, base).distortion
    out = lp.terminal_lp_transform(m, terms, base, p)
    assert eval_distortion(m, out, "terminal", terms).distortion <= lp.transform_bound(alpha, p) * (1 + 1e-9)
    # terminal images keep a zero last coordinate
    assert np.all(out.vectors[list(terms), -1] == 0)


# ---------------------------------------------------------------------------
# JL


def _gaussian(n, d, seed):
    return lp.EmbeddedPoints(np.random.default_rng(seed).standard_normal((n, d)), 2.0)


def test_jl_single_terminal_is_exact():
    pts = _gaussian(10, 5, 0)
    out = lp.jl_terminal_embed(pts, TerminalSet([3]), 0.5, 0)
    assert out.dim == 1
    m = FiniteMetric(pts.distance_matrix(), check=False)
    assert np.allclose(out.vectors[:, 0], m.d[3])
    assert eval_distortion(m, out, "terminal", [3]).distortion == pytest.approx(1.0)


def test_jl_identity_projection_limit():
    pts = _gaussian(20, 3, 1)
    terms = TerminalSet([0, 5, 9, 12])
    out = lp.jl_terminal_embed(pts, terms, 0.01, 0)
    assert out.meta["base_dim"] == 3
    m = FiniteMetric(pts.distance_matrix(), check=False)
    assert eval_distortion(m, out, "terminal", terms).distortion <= math.sqrt(10) * (1 + 1e-9)


def test_jl_gaussian_distortion():
    pts = _gaussian(32, 64, 2)
    terms = TerminalSet(range(0, 32, 4))
    m = FiniteMetric(pts.distance_matrix(), check=False)
    for seed in range(10):
        out = lp.jl_terminal_embed(pts, terms, 0.5, seed)
        assert out.meta["base_dim"] < 64
        assert eval_distortion(m, out, "terminal", terms).distortion <= 6


def test_jl_requires_euclidean():
    with pytest.raises(ValueError):
        lp.jl_terminal_embed(lp.EmbeddedPoints(np.zeros((3, 2)), 1.0), TerminalSet([0]))


# ---------------------------------------------------------------------------
# strong embedding


@given(graphs_with_terminals(min_n=2, max_n=12), st.sampled_from([1.0, 2.0]), st.integers(0, 2 ** 32))
def test_strong_embedding_blocks(gt, p, seed):
    g, terms = gt
    m = shortest_path_metric(g)
    emb = lp.strong_terminal_lp(m, terms, p, seed)
    gb, fb, h = lp.split_strong(emb)
    assert np.all(h[list(terms)] == 0)
    assert np.all(np.abs(h[:, None] - h[None, :]) <= m.d + 1e-9)
    assert np.all(emb.distance_matrix() <= m.d * (1 + 1e-9) + 1e-12)
    ids = list(terms)
    dist_k = m.d[:, ids].min(axis=1)
    assert np.allclose(h, dist_k)
    # the h coordinate alone lower-bounds every image distance
    img = emb.distance_matrix()
    scale = emb.meta["scale"]
    assert np.all(img >= scale * np.abs(h[:, None] - h[None, :]) - 1e-9)


def test_strong_embedding_case_split():
    from termembed.generators import gen_random
    g, terms = gen_random("gnp", {"n": 30, "p": 0.15, "k": 5}, np.random.default_rng(4))
    m = shortest_path_metric(g)
    p = 2.0
    emb = lp.strong_terminal_lp(m, terms, p, 5)
    _, fb, h = lp.split_strong(emb)
    ids = list(terms)
    fk = lp.EmbeddedPoints(fb[ids], p)
    alpha = eval_distortion(induced_metric(m, terms), fk).distortion
    img = emb.distance_matrix()
    checked = 0
    for t in ids:
        for x in range(m.n):
            if x in terms:
                continue
            if m.d[x, t] <= 3 * alpha * h[x]:
                checked += 1
                assert m.d[x, t] / img[t, x] <= 3 * alpha * 3 ** (1 / p) * (1 + 1e-9)
    assert checked > 0


def test_write_read_embedding(tmp_path):
    emb = lp.bourgain_embed(shortest_path_metric(cycle(6)), 1.0, 3)[0]
    side = lp.write_embedding(tmp_path / "e.csv", emb, seed=3, params={"c1": 1})
    back = lp.read_embedding(tmp_path / "e.csv")
    assert np.array_equal(back.vectors, emb.vectors) and back.p == 1.0
    man = json.load(open(side))
    assert man["seed"] == 3 and man["dim"] == emb.dim
