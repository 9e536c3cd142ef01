"""Exhaustive ground-truth oracles for small instances.

Everything here is deliberately naive and shares no shortest-path or tree
code with the algorithms it checks; only the graph container is common.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .core import WeightedGraph

MAX_TREE_ENUM = 9
MAX_BISECTION = 14
MAX_DISTORTION = 256


def floyd_warshall(g: WeightedGraph, weights=None) -> np.ndarray:
    n = g.n
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    w = [e[2] for e in g.edges] if weights is None else list(weights)
    for (u, v, _), c in zip(g.edges, w):
        if c < d[u, v]:
            d[u, v] = d[v, u] = c
    for m in range(n):
        d = np.minimum(d, d[:, m:m + 1] + d[m:m + 1, :])
    return d


def tree_distances(n: int, edges) -> np.ndarray:
    """All-pairs distances in a forest by plain BFS from every vertex."""
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    d = np.full((n, n), math.inf)
    for s in range(n):
        d[s, s] = 0.0
        todo = [s]
        while todo:
            x = todo.pop()
            for y, w in adj[x]:
                if d[s, y] == math.inf:
                    d[s, y] = d[s, x] + w
                    todo.append(y)
    return d


def spanning_trees(g: WeightedGraph, limit: int = MAX_TREE_ENUM):
    """Yield every spanning tree as a sorted tuple of edge ids (include/exclude backtracking)."""
    n, m = g.n, g.m
    if n > limit:
        raise ValueError(f"spanning-tree enumeration capped at n <= {limit}")
    if n <= 1:
        yield ()
        return
    edges = [(u, v) for u, v, _ in g.edges]

    def find(par, x):
        while par[x] != x:
            x = par[x]
        return x

    def connectable(par, start):
        # can the current forest plus edges[start:] still connect everything?
        p = list(par)
        comps = sum(1 for x in range(n) if find(p, x) == x)
        for u, v in edges[start:]:
            a, b = find(p, u), find(p, v)
            if a != b:
                p[a] = b
                comps -= 1
        return comps == 1

    def rec(i, par, chosen):
        if len(chosen) == n - 1:
            yield tuple(chosen)
            return
        if i == m or not connectable(par, i):
            return
        u, v = edges[i]
        a, b = find(par, u), find(par, v)
        if a != b:
            p2 = list(par)
            p2[a] = b
            yield from rec(i + 1, p2, chosen + [i])
        yield from rec(i + 1, par, chosen)

    yield from rec(0, list(range(n)), [])


def brute_force_distortion(src: np.ndarray, dst: np.ndarray, terms=None) -> float:
    """Distortion over all pairs, or over pairs touching ``terms``."""
    n = len(src)
    if n > MAX_DISTORTION:
        raise ValueError(f"distortion oracle capped at n <= {MAX_DISTORTION}")
    ks = None if terms is None else set(terms)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if ks is None or u in ks or v in ks]
    return _exact_distortion(src, dst, pairs)


def _exact_distortion(src, dst, pairs) -> float:
    expand = 0.0
    contract = 0.0
    for u, v in pairs:
        a, b = float(src[u][v]), float(dst[u][v])
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0:
            return math.inf
        expand = max(expand, b / a)
        contract = max(contract, a / b)
    if expand == 0.0:
        return 1.0
    return expand * contract


def brute_force_tree_distortion(g: WeightedGraph, terms=None) -> tuple[float, tuple]:
    """Smallest (terminal) distortion over all spanning trees of g, with a witness tree."""
    dg = floyd_warshall(g)
    best, arg = math.inf, None
    for ids in spanning_trees(g):
        dt = tree_distances(g.n, [g.edges[i] for i in ids])
        val = brute_force_distortion(dg, dt, terms)
        if val < best:
            best, arg = val, ids
    return best, arg


def _caps(g: WeightedGraph) -> list[float]:
    return list(g.capacities) if g.capacities is not None else [1.0] * g.m


def cut_weight(g: WeightedGraph, side) -> float:
    s = set(side)
    return float(sum(c for (u, v, _), c in zip(g.edges, _caps(g)) if (u in s) != (v in s)))


def brute_force_min_bisection(g: WeightedGraph) -> tuple[list[int], float]:
    """Exhaustive minimum bisection; returns the lexicographically smallest optimal side containing 0."""
    n = g.n
    if n > MAX_BISECTION:
        raise ValueError(f"bisection oracle capped at n <= {MAX_BISECTION}")
    if n % 2:
        raise ValueError("bisection needs an even vertex count")
    best, arg = math.inf, None
    for rest in itertools.combinations(range(1, n), n // 2 - 1):
        side = [0, *rest]
        val = cut_weight(g, side)
        if arg is None or val < best - 1e-12 * max(1.0, best):
            best, arg = val, side
    return arg, best


def all_cuts(n: int):
    """Every nonempty proper subset S of V (S and V - S counted once: S never contains n-1)."""
    for mask in range(1, 2 ** (n - 1)):
        yield [v for v in range(n - 1) if mask >> v & 1]


def random_cuts(n: int, count: int, rng=None):
    rng = np.random.default_rng(rng)
    for _ in range(count):
        bits = rng.random(n) < 0.5
        if bits.all() or not bits.any():
            bits[int(rng.integers(n))] ^= True
        yield np.flatnonzero(bits).tolist()


def naive_lca(parent, a: int, b: int) -> int:
    """Lowest common ancestor by comparing root paths."""
    up = []
    x = a
    while x != -1:
        up.append(x)
        x = parent[x]
    anc = set(up)
    x = b
    while x not in anc:
        x = parent[x]
    return x


def naive_tree_path(n: int, edges, u: int, v: int) -> list[int]:
    """Vertex path between u and v by DFS with explicit parent map."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b, _ in edges:
        adj[a].append(b)
        adj[b].append(a)
    par = {u: None}
    todo = [u]
    while todo:
        x = todo.pop()
        for y in adj[x]:
            if y not in par:
                par[y] = x
                todo.append(y)
    out = [v]
    while out[-1] != u:
        out.append(par[out[-1]])
    return out[::-1]
