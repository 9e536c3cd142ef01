"""Instance generators: lower-bound gadgets and random families."""
from __future__ import annotations

import numpy as np

from .core import GraphError, TerminalSet, WeightedGraph


def gen_alternating_cycle(k: int, extra: int = 0) -> tuple[WeightedGraph, TerminalSet]:
    """Unit cycle C_2k with terminals at even positions.

    k = 1 degenerates to a single unit edge with one terminal. ``extra``
    appends pendant non-terminals hung off vertex 1 in a unit path.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        edges = [(0, 1, 1.0)]
        n = 2
    else:
        n = 2 * k
        edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
    prev = 1
    for j in range(extra):
        edges.append((prev, n + j, 1.0))
        prev = n + j
    return WeightedGraph(n + extra, edges), TerminalSet(range(0, n, 2), n + extra)


def lightness_gadget(k: int, n: int, w: float) -> tuple[WeightedGraph, TerminalSet]:
    """Cycle of k terminals where consecutive terminals v_i, v_{i+1} both see every vertex of a unit path P_i.

    Terminals are 0..k-1; P_i occupies ids k + i*n .. k + (i+1)*n - 1.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    if w <= 0:
        raise ValueError("w must be positive")
    edges = {}
    for i in range(k):
        base = k + i * n
        for j in range(n - 1):
            edges[(base + j, base + j + 1)] = 1.0
        for j in range(n):
            for v in (i, (i + 1) % k):
                edges[(v, base + j)] = float(w)
    return WeightedGraph(k + k * n, [(u, v, c) for (u, v), c in edges.items()]), TerminalSet(range(k), k + k * n)


def gen_lightness_gadget(k: int, n: int, eps: float) -> tuple[WeightedGraph, TerminalSet]:
    """Gadget with cross weight w = k/eps; requires k <= eps*n/2."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if k > eps * n / 2:
        raise ValueError(f"need k <= eps*n/2, got k={k}, n={n}, eps={eps}")
    return lightness_gadget(k, n, k / eps)


def gadget_mst_lower_bound(k: int, n: int, w: float) -> float:
    return k * (n - 1) + (2 * k - 1) * w


def _weights(m: int, rng, kind: str, lo: float, hi: float) -> np.ndarray:
    if kind == "unit":
        return np.ones(m)
    if kind == "int":
        return rng.integers(int(lo), int(hi) + 1, size=m).astype(float)
    if kind == "uniform":
        return rng.uniform(lo, hi, size=m)
    raise ValueError(f"unknown weight kind {kind!r}")


def _gnp_edges(n: int, p: float, rng) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    out = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                out.append((v, v + 1))
            if i + 1 < rows:
                out.append((v, v + cols))
    return out


def _tree_chord_edges(n: int, chords: int, rng) -> list[tuple[int, int]]:
    out = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    cap = n * (n - 1) // 2
    chords = min(chords, cap - len(out))
    while chords > 0:
        u, v = sorted(rng.choice(n, 2, replace=False).tolist())
        if (u, v) not in out:
            out.add((u, v))
            chords -= 1
    return sorted(out)


def gen_random(family: str, params: dict, rng=None) -> tuple[WeightedGraph, TerminalSet]:
    """Connected random instance; terminals drawn uniformly without replacement.

    family: ``gnp`` (n, p), ``grid`` (rows, cols) or ``tree+chords`` (n, chords).
    Common params: k (terminal count, default 2), weights (unit|int|uniform),
    wlo/whi (weight range), capacities (None|unit|int|uniform), tries.
    """
    rng = np.random.default_rng(rng)
    params = dict(params)
    kind = params.get("weights", "uniform")
    lo, hi = params.get("wlo", 1.0), params.get("whi", 10.0)
    if lo <= 0 and kind != "unit":
        raise ValueError("weights must be positive")
    if family == "gnp":
        n, p = int(params["n"]), float(params["p"])
        if n > 1 and p <= 0:
            raise GraphError("gnp with p <= 0 is never connected")
        for _ in range(int(params.get("tries", 1000))):
            pairs = _gnp_edges(n, p, rng)
            g = WeightedGraph(n, [(u, v, 1.0) for u, v in pairs])
            if g.is_connected():
                break
        else:
            raise GraphError(f"gnp({n}, {p}) not connected after retries")
    elif family == "grid":
        rows, cols = int(params["rows"]), int(params["cols"])
        n = rows * cols
        pairs = _grid_edges(rows, cols)
    elif family in ("tree+chords", "tree_chords", "random-weighted-tree-plus-chords"):
        n = int(params["n"])
        pairs = _tree_chord_edges(n, int(params.get("chords", n // 2)), rng)
    else:
        raise ValueError(f"unknown family {family!r}")
    if n < 1:
        raise ValueError("need at least one vertex")
    w = _weights(len(pairs), rng, kind, lo, hi)
    edges = [(u, v, float(c)) for (u, v), c in zip(pairs, w)]
    g = WeightedGraph(n, edges)
    cap_kind = params.get("capacities")
    if cap_kind is not None:
        g = g.with_capacities(_weights(g.m, rng, cap_kind, params.get("clo", 1.0), params.get("chi", 10.0)))
    if not g.is_connected():
        raise GraphError(f"{family} instance is disconnected")
    k = int(params.get("k", 2))
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    terms = TerminalSet(sorted(rng.choice(n, k, replace=False).tolist()), n)
    return g, terms


def vertex_cover_terminals(g: WeightedGraph, rng=None) -> TerminalSet:
    """Random minimal-ish vertex cover: scan edges in random order, cover each uncovered edge by a random endpoint."""
    rng = np.random.default_rng(rng)
    cover: set[int] = set()
    for i in rng.permutation(g.m):
        u, v, _ = g.edges[i]
        if u not in cover and v not in cover:
            cover.add(int(u) if rng.random() < 0.5 else int(v))
    if not cover:
        cover.add(0)
    return TerminalSet(sorted(cover))
