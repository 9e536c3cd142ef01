"""Embeddings into l_p: Frechet (Bourgain-style) maps, the terminal
transform that appends a distance-to-nearest-terminal coordinate, a
Johnson-Lindenstrauss terminal embedding, and the strong terminal
concatenation g + f_ext + h.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import REL_TOL, FiniteMetric, TerminalSet, eval_distortion, induced_metric, nearest_in_set


@dataclass
class EmbeddedPoints:
    vectors: np.ndarray
    p: float = 2.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be an n x dim matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("coordinates must be finite")
        if not (1 <= self.p < math.inf):
            raise ValueError("p must lie in [1, inf)")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def distance_matrix(self) -> np.ndarray:
        x = self.vectors
        if x.shape[1] == 0:
            return np.zeros((self.n, self.n))
        diff = np.abs(x[:, None, :] - x[None, :, :])
        if self.p == 2:
            return np.sqrt((diff ** 2).sum(axis=2))
        if self.p == 1:
            return diff.sum(axis=2)
        return (diff ** self.p).sum(axis=2) ** (1 / self.p)

    def dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.vectors[i] - self.vectors[j], ord=self.p))

    def scaled(self, factor: float) -> "EmbeddedPoints":
        return EmbeddedPoints(self.vectors * factor, self.p, dict(self.meta))


@dataclass
class FrechetMap:
    """Coordinates ``d(x, A_i) / t**(1/p)`` for sets ``A_1..A_t``."""

    sets: list[np.ndarray]
    p: float

    @property
    def t(self) -> int:
        return len(self.sets)

    @property
    def scale(self) -> float:
        return self.t ** (1.0 / self.p)

    def evaluate(self, m: FiniteMetric, points=None) -> np.ndarray:
        rows = m.d if points is None else m.d[list(points)]
        cols = [rows[:, a].min(axis=1) for a in self.sets]
        return np.stack(cols, axis=1) / self.scale


def bourgain_embed(m: FiniteMetric, p: float = 2.0, rng=None, c1: float = 2.0,
                   universe=None) -> tuple[EmbeddedPoints, FrechetMap]:
    """Frechet embedding with ceil(log2 n) scales x ceil(c1 log2 n) repetitions.

    At scale j every point joins A independently with probability 2**-j;
    empty and full draws are redrawn. ``universe`` restricts the sampled sets to a
    subset of point ids (used to build terminal-only maps); coordinates are
    still evaluated for every point of ``m``.
    """
    if m.n < 2:
        raise ValueError("need at least two points")
    rng = np.random.default_rng(rng)
    ids = np.arange(m.n) if universe is None else np.array(sorted(universe))
    size = len(ids)
    logn = math.ceil(math.log2(max(size, 2)))
    reps = max(1, math.ceil(c1 * logn))
    sets = []
    for j in range(1, logn + 1):
        q = 2.0 ** (-j)
        for _ in range(reps):
            while True:
                pick = ids[rng.random(size) < q]
                # the whole universe gives an all-zero coordinate, so redraw it too
                if 0 < pick.size < size or size == 1:
                    break
            sets.append(pick)
    fmap = FrechetMap(sets, p)
    pts = EmbeddedPoints(fmap.evaluate(m), p, {"c1": c1, "scales": logn, "reps": reps})
    return pts, fmap


def make_noncontractive(pts: EmbeddedPoints, m: FiniteMetric, pairs="all", terms=None) -> EmbeddedPoints:
    """Divide out the worst contraction so no pair shrinks."""
    rep = eval_distortion(m, pts, pairs, terms)
    if not math.isfinite(rep.max_contraction):
        raise ValueError("embedding collapses a pair with positive distance")
    return pts.scaled(rep.max_contraction)


def terminal_lp_transform(m: FiniteMetric, terms: TerminalSet, base: EmbeddedPoints,
                          p: float | None = None) -> EmbeddedPoints:
    """Extend a non-contractive embedding of K to all of X.

    ``base.vectors[i]`` is the image of the i-th terminal (sorted order).
    Point x maps to ``(f(k_x), d(x, k_x))`` with k_x its nearest terminal.
    """
    p = base.p if p is None else p
    ids = list(terms)
    if base.n != len(ids):
        raise ValueError("base embedding must have one row per terminal")
    dk = induced_metric(m, terms).d
    if len(ids) > 1 and base.dim > 0:
        img = EmbeddedPoints(base.vectors, p).distance_matrix()
        short = img < dk * (1 - REL_TOL)
        np.fill_diagonal(short, False)
        if np.any(short):
            i, j = np.argwhere(short)[0]
            raise ValueError(f"base embedding contracts terminal pair ({ids[i]}, {ids[j]}): "
                             f"{img[i, j]} < {dk[i, j]}")
    nearest, dist = nearest_in_set(m, ids)
    row = {t: i for i, t in enumerate(ids)}
    head = base.vectors[[row[int(t)] for t in nearest]]
    vec = np.concatenate([head, dist[:, None]], axis=1)
    return EmbeddedPoints(vec, p, {"nearest_terminal": nearest.tolist()})


def transform_bound(alpha: float, p: float) -> float:
    """Terminal distortion guaranteed by the transform for a base of distortion alpha."""
    return 2 ** ((p - 1) / p) * ((2 * alpha) ** p + 1) ** (1 / p)


def jl_dimension(k: int, eps: float, c: float = 4.0) -> int:
    return max(1, math.ceil(c * math.log(max(k, 2)) / eps ** 2))


def jl_terminal_embed(pts: EmbeddedPoints, terms: TerminalSet, eps: float = 0.5, rng=None,
                      c: float = 4.0) -> EmbeddedPoints:
    """Gaussian projection of the terminals followed by the terminal transform.

    When the JL target dimension is not below the input dimension the
    projection is skipped (identity), which is the eps -> 0 limit.
    """
    if pts.p != 2:
        raise ValueError("JL terminal embedding needs Euclidean (p=2) input")
    rng = np.random.default_rng(rng)
    m = FiniteMetric(pts.distance_matrix(), check=False)
    ids = list(terms)
    kvec = pts.vectors[ids]
    if len(ids) == 1:
        base = EmbeddedPoints(np.zeros((1, 0)), 2.0)
    else:
        dim = jl_dimension(len(ids), eps, c)
        if dim >= pts.dim:
            proj = kvec
        else:
            g = rng.standard_normal((pts.dim, dim)) / math.sqrt(dim)
            proj = kvec @ g
        base = make_noncontractive(EmbeddedPoints(proj, 2.0), induced_metric(m, ids))
    out = terminal_lp_transform(m, terms, base, 2.0)
    out.meta["base_dim"] = base.dim
    return out


def strong_terminal_lp(m: FiniteMetric, terms: TerminalSet, p: float = 2.0, rng=None,
                       c1: float = 2.0) -> EmbeddedPoints:
    """Concatenate a Frechet map of X, a Frechet map of K extended to X, and d(., K).

    The result is divided by 3**(1/p), making it non-expansive.
    """
    rng = np.random.default_rng(rng)
    g_pts, g_map = bourgain_embed(m, p, rng, c1)
    ids = list(terms)
    if len(ids) >= 2:
        f_pts, f_map = bourgain_embed(m, p, rng, c1, universe=ids)
        fhat = f_pts.vectors
    else:
        f_map = FrechetMap([np.array(ids)], p)
        fhat = f_map.evaluate(m)
    h = m.d[:, ids].min(axis=1)[:, None]
    vec = np.concatenate([g_pts.vectors, fhat, h], axis=1) / 3 ** (1 / p)
    meta = {"g_dim": g_pts.dim, "f_dim": fhat.shape[1], "scale": 3 ** (-1 / p),
            "g_sets": [a.tolist() for a in g_map.sets], "f_sets": [a.tolist() for a in f_map.sets]}
    return EmbeddedPoints(vec, p, meta)


def split_strong(emb: EmbeddedPoints) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Undo the scaling of ``strong_terminal_lp`` and return its (g, f_ext, h) blocks."""
    v = emb.vectors / emb.meta["scale"]
    a, b = emb.meta["g_dim"], emb.meta["f_dim"]
    return v[:, :a], v[:, a:a + b], v[:, a + b]


def write_embedding(path, emb: EmbeddedPoints, seed=None, params=None) -> str:
    """CSV ``point,dim0..dimD`` plus a ``<path>.json`` manifest with p, seed and parameters."""
    path = str(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point"] + [f"dim{i}" for i in range(emb.dim)])
        for i, row in enumerate(emb.vectors):
            w.writerow([i] + [repr(float(x)) for x in row])
    manifest = {"p": emb.p, "n": emb.n, "dim": emb.dim, "seed": seed, "params": params or {}}
    side = path + ".json"
    with open(side, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return side


def read_embedding(path) -> EmbeddedPoints:
    path = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    dim = len(rows[0]) - 1
    vec = np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, dim)
    p = 2.0
    try:
        with open(path + ".json") as fh:
            p = float(json.load(fh)["p"])
    except FileNotFoundError:
        pass
    return EmbeddedPoints(vec, p)
