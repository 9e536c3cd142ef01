"""Light spanning trees with terminal distortion guarantees.

Pipeline: shallow-light forest rooted at the terminals, a supergraph on K
whose edge weights are shortest terminal-to-terminal routes using exactly
one non-forest edge, its MST, and the union of the forest with the MST's
representative edges.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (TerminalSet, TreeSample, UnionFind, WeightedGraph, dijkstra, leq,
                   shortest_path_metric)


def _adjacency(n: int, edges) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, (u, v, _) in enumerate(edges):
        adj[u].append((v, i))
        adj[v].append((u, i))
    for lst in adj:
        lst.sort()
    return adj


def _kruskal(n: int, edges) -> list[int]:
    order = sorted(range(len(edges)), key=lambda i: (edges[i][2], i))
    uf = UnionFind(n)
    return [i for i in order if uf.union(edges[i][0], edges[i][1])]


def _slt_edges(n: int, edges, root: int, alpha: float) -> list[int]:
    """Edge indices of an (alpha, 1 + 2/(alpha-1)) shallow-light tree.

    Walk the Euler tour of the MST from ``root``; whenever the accumulated
    tour length since the last reset exceeds ``alpha * d(root, v)``, add the
    shortest root-v path and reset the counter to d(root, v). The result is
    a shortest-path tree of MST plus the added paths. Zero weights allowed.
    """
    weights = [w for _, _, w in edges]
    adj = _adjacency(n, edges)
    dist, pred, pedge = dijkstra(adj, weights, root)
    mst_ids = _kruskal(n, edges)
    keep = set(mst_ids)
    tree_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i in mst_ids:
        u, v, _ = edges[i]
        tree_adj[u].append((v, i))
        tree_adj[v].append((u, i))
    for lst in tree_adj:
        lst.sort()

    def splice(v):
        x = v
        while x != root:
            keep.add(pedge[x])
            x = pred[x]

    # iterative Euler tour: every tree edge traversed down and back up
    curr = 0.0
    seen = {root}
    stack = [(root, iter(tree_adj[root]))]
    while stack:
        x, it = stack[-1]
        advanced = False
        for y, i in it:
            if y in seen:
                continue
            seen.add(y)
            curr += weights[i]
            if not leq(curr, alpha * dist[y]):
                splice(y)
                curr = dist[y]
            stack.append((y, iter(tree_adj[y])))
            advanced = True
            break
        if not advanced:
            stack.pop()
            if stack:
                parent = stack[-1][0]
                # climbing back costs the edge weight again
                w_up = next(weights[i] for z, i in tree_adj[x] if z == parent)
                curr += w_up
                if not leq(curr, alpha * dist[parent]):
                    splice(parent)
                    curr = dist[parent]
    h_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i in sorted(keep):
        u, v, _ = edges[i]
        h_adj[u].append((v, i))
        h_adj[v].append((u, i))
    for lst in h_adj:
        lst.sort()
    _, _, hedge = dijkstra(h_adj, weights, root)
    return sorted(hedge.values())


def slt(g: WeightedGraph, root: int, alpha: float = 2.0) -> TreeSample:
    """Shallow-light spanning tree: root stretch <= alpha, lightness <= 1 + 2/(alpha-1)."""
    g.require_connected()
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if alpha == 1:
        warnings.warn("alpha = 1 gives a shortest-path tree with no lightness guarantee", stacklevel=2)
    ids = _slt_edges(g.n, g.edges, root, alpha)
    return TreeSample(g.n, [g.edges[i] for i in ids], "spanning", {"root": root, "alpha": alpha})


@dataclass
class SltForest:
    """One tree per terminal; ``owner[u]`` is the terminal of u's component."""

    n: int
    edge_ids: list[int]
    owner: np.ndarray
    depth: np.ndarray  # d_F(owner[u], u)
    alpha: float

    def edges(self, g: WeightedGraph) -> list[tuple[int, int, float]]:
        return [g.edges[i] for i in self.edge_ids]

    def components(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for u, t in enumerate(self.owner):
            out.setdefault(int(t), []).append(u)
        return out


def slt_forest(g: WeightedGraph, terms: TerminalSet, alpha: float = 2.0) -> SltForest:
    """SLT rooted at a virtual vertex joined to every terminal by a zero edge, virtual vertex removed."""
    g.require_connected()
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    n = g.n
    virtual = n
    aug = list(g.edges) + [(t, virtual, 0.0) for t in terms]
    ids = [i for i in _slt_edges(n + 1, aug, virtual, alpha) if i < g.m]
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i in ids:
        u, v, w = g.edges[i]
        adj[u].append((v, w))
        adj[v].append((u, w))
    owner = np.full(n, -1, dtype=int)
    depth = np.full(n, math.inf)
    for t in terms:
        if owner[t] != -1:
            raise AssertionError("two terminals share a forest component")
        owner[t] = t
        depth[t] = 0.0
        stack = [t]
        while stack:
            x = stack.pop()
            for y, w in adj[x]:
                if owner[y] == -1:
                    owner[y] = t
                    depth[y] = depth[x] + w
                    stack.append(y)
                elif owner[y] != t:
                    raise AssertionError("two terminals share a forest component")
    if np.any(owner < 0):
        raise AssertionError("forest does not cover every vertex")
    return SltForest(n, ids, owner, depth, alpha)


@dataclass
class SuperGraph:
    terms: tuple[int, ...]
    weight: dict[tuple[int, int], float]  # (v_i, v_j) with v_i < v_j
    rep: dict[tuple[int, int], int]  # representative graph edge id

    @property
    def k(self) -> int:
        return len(self.terms)


def build_supergraph(g: WeightedGraph, terms: TerminalSet, f: SltForest) -> SuperGraph:
    """w'(v_i, v_j) = min over non-forest edges {a, b} of d_F(v_i, a) + w(a, b) + d_F(b, v_j)."""
    in_forest = set(f.edge_ids)
    weight: dict[tuple[int, int], float] = {}
    rep: dict[tuple[int, int], int] = {}
    for i, (a, b, w) in enumerate(g.edges):
        if i in in_forest:
            continue
        ta, tb = int(f.owner[a]), int(f.owner[b])
        if ta == tb:
            continue
        val = float(f.depth[a] + w + f.depth[b])
        key = (ta, tb) if ta < tb else (tb, ta)
        # edges are scanned by increasing id, so strict < keeps the smallest id on ties
        if key not in weight or val < weight[key]:
            weight[key] = val
            rep[key] = i
    return SuperGraph(tuple(terms), weight, rep)


def supergraph_mst(sg: SuperGraph) -> list[tuple[int, int]]:
    pos = {t: i for i, t in enumerate(sg.terms)}
    keys = sorted(sg.weight, key=lambda kk: (sg.weight[kk], sg.rep[kk]))
    uf = UnionFind(len(sg.terms))
    return [kk for kk in keys if uf.union(pos[kk[0]], pos[kk[1]])]


def light_terminal_tree(g: WeightedGraph, terms: TerminalSet, alpha: float = 2.0) -> TreeSample:
    """Spanning tree with terminal distortion <= k*alpha + (k-1)*alpha**2.

    For alpha > 1 its lightness is at most 2*alpha + 1 + 2/(alpha-1).
    """
    g.require_connected()
    if alpha > 2:
        warnings.warn("alpha > 2 is dominated by alpha = 2 in both distortion and lightness", stacklevel=2)
    f = slt_forest(g, terms, alpha)
    sg = build_supergraph(g, terms, f)
    chosen = supergraph_mst(sg)
    if len(chosen) != len(sg.terms) - 1:
        raise AssertionError("supergraph is disconnected")
    r_ids = sorted(sg.rep[kk] for kk in chosen)
    ids = sorted(set(f.edge_ids) | set(r_ids))
    k = len(sg.terms)
    meta = {"alpha": alpha, "forest_edges": len(f.edge_ids), "representative_edges": r_ids,
            "distortion_bound": k * alpha + (k - 1) * alpha ** 2,
            "lightness_bound": (2 * alpha + 1 + 2 / (alpha - 1)) if alpha > 1 else math.inf}
    t = TreeSample(g.n, [g.edges[i] for i in ids], "spanning", meta)
    if not t.is_tree():
        raise AssertionError("forest plus representative edges is not a spanning tree")
    return t


@dataclass
class BottleneckReport:
    worst_ratio: float
    worst_pair: tuple[int, int] | None
    alpha: float

    @property
    def ok(self) -> bool:
        return leq(self.worst_ratio, self.alpha)


def minimax_matrix(sg: SuperGraph) -> np.ndarray:
    """All-pairs bottleneck (minimax edge weight) distances on the supergraph."""
    k = len(sg.terms)
    pos = {t: i for i, t in enumerate(sg.terms)}
    b = np.full((k, k), math.inf)
    np.fill_diagonal(b, 0.0)
    for (u, v), w in sg.weight.items():
        b[pos[u], pos[v]] = b[pos[v], pos[u]] = w
    for m in range(k):
        b = np.minimum(b, np.maximum(b[:, m][:, None], b[m][None, :]))
    return b


def check_bottleneck(g: WeightedGraph, terms: TerminalSet, sg: SuperGraph, alpha: float) -> BottleneckReport:
    """Worst ratio minimax_{G'}(v_i, v_j) / d_G(v_i, v_j) over terminal pairs."""
    ids = list(terms)
    dg = shortest_path_metric(g).d[np.ix_(ids, ids)]
    b = minimax_matrix(sg)
    worst, pair = 0.0, None
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            r = b[i, j] / dg[i, j]
            if r > worst:
                worst, pair = float(r), (ids[i], ids[j])
    return BottleneckReport(worst, pair, alpha)
