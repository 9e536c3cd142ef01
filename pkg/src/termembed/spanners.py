"""Terminal spanners and pairwise distance preservers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (REL_TOL, FiniteMetric, TerminalSet, WeightedGraph, dijkstra, distance_matrix,
                   format_graph, induced_metric, leq, nearest_in_set,
                   shortest_path_metric, shortest_path_tree)


@dataclass
class Spanner:
    n: int
    edges: list[tuple[int, int, float]]
    kind: str = "metric"  # "metric" or "graph"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = sorted({(min(u, v), max(u, v)): (min(u, v), max(u, v), float(w))
                             for u, v, w in self.edges}.values())

    @property
    def size(self) -> int:
        return len(self.edges)

    def graph(self) -> WeightedGraph:
        return WeightedGraph(self.n, self.edges)

    def distance_matrix(self) -> np.ndarray:
        return distance_matrix(self.graph())

    def to_text(self, terms=None) -> str:
        return format_graph(self.graph(), terms, comments=[f"kind: {self.kind}"])


def _normalize_pairs(pairs) -> list[tuple[int, int]]:
    out = set()
    for u, v in pairs:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-pair ({u}, {v})")
        out.add((min(u, v), max(u, v)))
    return sorted(out)


def greedy_spanner(m: FiniteMetric, t: float = 1.0, ids=None) -> Spanner:
    """Path-greedy (2t-1)-spanner of a metric.

    Pairs are scanned by increasing distance (lexicographic ties); a pair
    becomes an edge when the spanner built so far stretches it by more
    than 2t-1. ``ids`` relabels the metric's points in the output.
    """
    if t < 1:
        raise ValueError("stretch parameter t must be >= 1")
    n = m.n
    ids = list(range(n)) if ids is None else list(ids)
    bound = 2 * t - 1
    iu, ju = np.triu_indices(n, 1)
    order = np.lexsort((ju, iu, m.d[iu, ju]))
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    weights: list[float] = []
    edges = []
    for idx in order:
        u, v = int(iu[idx]), int(ju[idx])
        duv = float(m.d[u, v])
        if duv == 0:
            continue
        limit = bound * duv * (1 + REL_TOL)
        dist, _, _ = dijkstra(adj, weights, u)
        if dist.get(v, math.inf) > limit:
            eid = len(weights)
            weights.append(duv)
            adj[u].append((v, eid))
            adj[v].append((u, eid))
            edges.append((ids[u], ids[v], duv))
    n_out = max(ids) + 1 if ids else 0
    return Spanner(n_out, edges, "metric", {"t": t, "stretch_bound": bound})


def terminal_metric_spanner(m: FiniteMetric, terms: TerminalSet, t: float = 1.0) -> Spanner:
    """Greedy spanner on K plus a star edge from each non-terminal to its nearest terminal."""
    ids = list(terms)
    core_sp = greedy_spanner(induced_metric(m, ids), t, ids=ids)
    nearest, dist = nearest_in_set(m, ids)
    kset = set(ids)
    star = [(x, int(nearest[x]), float(dist[x])) for x in range(m.n) if x not in kset]
    sp = Spanner(m.n, core_sp.edges + star, "metric",
                 {"t": t, "stretch_bound": 4 * t - 1, "terminal_edges": len(core_sp.edges),
                  "star_edges": len(star)})
    return sp


def pairwise_preserver(g: WeightedGraph, pairs, prune: bool = True) -> Spanner:
    """Subgraph keeping d_G(u, v) exactly for every requested pair.

    Union of tie-broken shortest paths, then greedy removal (heaviest edge
    first) of every edge whose deletion leaves all pair distances intact.
    """
    pairs = _normalize_pairs(pairs)
    if not pairs:
        return Spanner(g.n, [], "graph", {"pairs": 0})
    g.require_connected()
    by_src: dict[int, list[int]] = {}
    for u, v in pairs:
        by_src.setdefault(u, []).append(v)
    chosen: set[int] = set()
    target = {}
    for u, vs in by_src.items():
        d, pred, pedge = shortest_path_tree(g, u)
        for v in vs:
            target[(u, v)] = d[v]
            x = v
            while x != u:
                chosen.add(int(pedge[x]))
                x = int(pred[x])
    if prune:
        chosen = _prune(g, chosen, by_src, target)
    edges = [g.edges[i] for i in sorted(chosen)]
    return Spanner(g.n, edges, "graph", {"pairs": len(pairs),
                                         "size_target": g.n + math.sqrt(g.n) * len(pairs)})


def _prune(g, chosen, by_src, target):
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as sp_dijkstra

    srcs = sorted(by_src)
    alive = set(chosen)

    def pairs_ok(edge_ids):
        ids = sorted(edge_ids)
        u = np.array([g.edges[i][0] for i in ids], dtype=int)
        v = np.array([g.edges[i][1] for i in ids], dtype=int)
        w = np.array([g.edges[i][2] for i in ids])
        mat = csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                         shape=(g.n, g.n))
        d = sp_dijkstra(mat, directed=False, indices=srcs)
        for row, s in enumerate(srcs):
            for t in by_src[s]:
                if not leq(d[row, t], target[(s, t)]):
                    return False
        return True

    for i in sorted(chosen, key=lambda i: (-g.edges[i][2], -i)):
        trial = alive - {i}
        if trial and pairs_ok(trial):
            alive = trial
    return alive


def spt_forest(g: WeightedGraph, terms: TerminalSet) -> list[int]:
    """Edge ids of a shortest-path forest rooted at K (virtual zero-weight root).

    Ties between equidistant terminals resolve toward the smaller predecessor id.
    """
    ids = list(terms)
    dist, pred, pedge = dijkstra(g.adj, g.weights, ids)
    return sorted(pedge[x] for x in pred)


def terminal_graph_spanner(g: WeightedGraph, terms: TerminalSet, t: float = 1.0) -> Spanner:
    """(4t-1)-terminal subgraph spanner.

    Greedy (2t-1)-spanner of the terminal metric, its edges preserved
    exactly in G, plus a shortest-path forest rooted at K.
    """
    g.require_connected()
    ids = list(terms)
    m = shortest_path_metric(g)
    h_prime = greedy_spanner(induced_metric(m, ids), t, ids=ids)
    pairs = [(u, v) for u, v, _ in h_prime.edges]
    pres = pairwise_preserver(g, pairs)
    forest = spt_forest(g, terms)
    eids = {g.eid(u, v) for u, v, _ in pres.edges} | set(forest)
    edges = [g.edges[i] for i in sorted(eids)]
    k = len(ids)
    return Spanner(g.n, edges, "graph", {
        "t": t, "stretch_bound": 4 * t - 1, "pairs": len(pairs), "preserver_edges": pres.size,
        "forest_edges": len(forest), "size_target": g.n + math.sqrt(g.n) * k ** (1 + 1 / t)})


def terminal_stretch(src: np.ndarray, sp_dist: np.ndarray, terms) -> float:
    """max over K x V of d_H / d_G (pairs at distance zero skipped)."""
    ids = list(terms)
    a = src[ids]
    b = sp_dist[ids]
    ok = a > 0
    return float((b[ok] / a[ok]).max()) if ok.any() else 1.0
