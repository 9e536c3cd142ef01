"""Path mappings, congestion of tree embeddings, and min bisection via trees.

A tree T over V (spanning or merely dominating) routes each graph edge e
along its tree path; each tree edge is in turn realized by a graph path
P_G(e'). ``M`` counts how often graph edge e'' appears in the route of e.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from .core import (GraphError, TerminalSet, TreeSample, WeightedGraph, format_graph, leq, mst, parse_graph,
                   shortest_path_metric, shortest_path_tree)
from .frt import frt_envelopes, remove_steiner, sample_frt


def _require_caps(g: WeightedGraph) -> np.ndarray:
    if g.capacities is None:
        raise GraphError("graph has no capacities")
    return np.array(g.capacities, dtype=float)


@dataclass
class PathMapping:
    tree_paths: list[list[int]]  # per graph edge: indices of tree edges on P_T(e)
    graph_paths: list[list[int]]  # per tree edge: graph edge ids of P_G(e')
    matrix: csr_matrix  # m x m, entry [e, e''] = M_{e''}(e)

    def multiset(self, e: int) -> dict[int, int]:
        row = self.matrix.getrow(e)
        return {int(j): int(v) for j, v in zip(row.indices, row.data)}


def _tree_index(t: TreeSample):
    parent, _, order = t.rooted(0)
    depth = [0] * t.n
    for x in order[1:]:
        depth[x] = depth[parent[x]] + 1
    edge_of = {}
    for j, (u, v, _) in enumerate(t.edges):
        edge_of[(u, v)] = j
        edge_of[(v, u)] = j
    return parent, depth, edge_of


def _tree_path_edges(u, v, parent, depth, edge_of) -> list[int]:
    out = []
    while depth[u] > depth[v]:
        out.append(edge_of[(u, parent[u])])
        u = parent[u]
    while depth[v] > depth[u]:
        out.append(edge_of[(v, parent[v])])
        v = parent[v]
    while u != v:
        out.append(edge_of[(u, parent[u])])
        out.append(edge_of[(v, parent[v])])
        u, v = parent[u], parent[v]
    return out


def path_mapping(g: WeightedGraph, t: TreeSample, weights=None) -> PathMapping:
    """Route every graph edge along the tree, each tree edge along a graph path.

    A tree edge of a spanning tree is realized by itself; otherwise by the
    tie-broken shortest path under ``weights`` (default: g's weights).
    """
    if t.n != g.n:
        raise GraphError("tree and graph cover different vertex sets")
    if not t.is_tree():
        raise GraphError("not a tree")
    w = g.weights if weights is None else np.asarray(weights, dtype=float)
    parent, depth, edge_of = _tree_index(t)
    graph_paths: list[list[int]] = []
    spt_cache: dict[int, np.ndarray] = {}
    for u, v, _ in t.edges:
        if t.kind == "spanning" and g.has_edge(u, v):
            graph_paths.append([g.eid(u, v)])
            continue
        if u not in spt_cache:
            spt_cache[u] = shortest_path_tree(g, u, w)
        _, pred, pedge = spt_cache[u]
        path, x = [], v
        while x != u:
            if pred[x] < 0:
                raise GraphError(f"no graph path between {u} and {v}")
            path.append(int(pedge[x]))
            x = int(pred[x])
        graph_paths.append(path[::-1])
    tree_paths = [_tree_path_edges(a, b, parent, depth, edge_of) for a, b, _ in g.edges]
    rows_a, cols_a = [], []
    for e, tp in enumerate(tree_paths):
        rows_a.extend([e] * len(tp))
        cols_a.extend(tp)
    a = csr_matrix((np.ones(len(rows_a)), (rows_a, cols_a)), shape=(g.m, len(t.edges)))
    rows_b, cols_b = [], []
    for j, gp in enumerate(graph_paths):
        rows_b.extend([j] * len(gp))
        cols_b.extend(gp)
    b = csr_matrix((np.ones(len(rows_b)), (rows_b, cols_b)), shape=(len(t.edges), g.m))
    return PathMapping(tree_paths, graph_paths, (a @ b).tocsr())


@dataclass
class CongestionReport:
    dist: np.ndarray
    load: np.ndarray
    distortion: np.ndarray
    cong: np.ndarray
    terminal_edge: np.ndarray  # mask of E_K

    @property
    def alpha_hat(self) -> float:
        return float(self.cong[self.terminal_edge].max()) if self.terminal_edge.any() else 0.0

    @property
    def beta_hat(self) -> float:
        return float(self.cong.max()) if self.cong.size else 0.0


def terminal_edge_mask(g: WeightedGraph, terms: TerminalSet) -> np.ndarray:
    tm = terms.mask(g.n)
    return np.array([bool(tm[u] or tm[v]) for u, v, _ in g.edges], dtype=bool)


def congestion_report(g: WeightedGraph, t: TreeSample, terms: TerminalSet, weights=None,
                      pm: PathMapping | None = None) -> CongestionReport:
    c = _require_caps(g)
    w = g.weights if weights is None else np.asarray(weights, dtype=float)
    pm = pm or path_mapping(g, t, w)
    dist = pm.matrix @ w
    load = pm.matrix.T @ c
    return CongestionReport(np.asarray(dist), np.asarray(load), np.asarray(dist) / w,
                            np.asarray(load) / c, terminal_edge_mask(g, terms))


def tree_capacities(g: WeightedGraph, t: TreeSample) -> np.ndarray:
    """C_T(e') for every tree edge (in ``t.edges`` order): capacity crossing the cut T - e'."""
    c = _require_caps(g)
    parent, _, order = t.rooted(0)
    # subtree membership via Euler intervals
    children: list[list[int]] = [[] for _ in range(t.n)]
    for x in order[1:]:
        children[parent[x]].append(x)
    tin = [0] * t.n
    tout = [0] * t.n
    clock = 0
    stack = [(0, False)]
    while stack:
        x, done = stack.pop()
        if done:
            tout[x] = clock
            continue
        tin[x] = clock
        clock += 1
        stack.append((x, True))
        for y in reversed(children[x]):
            stack.append((y, False))
    tin_a = np.array(tin)
    tout_a = np.array(tout)
    eu = np.array([u for u, _, _ in g.edges], dtype=int)
    ev = np.array([v for _, v, _ in g.edges], dtype=int)
    out = np.zeros(len(t.edges))
    for j, (u, v, _) in enumerate(t.edges):
        child = u if parent[u] == v else v
        lo, hi = tin_a[child], tout_a[child]
        inside_u = (tin_a[eu] >= lo) & (tin_a[eu] < hi)
        inside_v = (tin_a[ev] >= lo) & (tin_a[ev] < hi)
        out[j] = c[inside_u != inside_v].sum()
    return out


@dataclass
class CutReport:
    cuts: int
    worst_left_slack: float  # min over cuts of (mid - left)
    worst_right_slack: float  # min over cuts of (right - mid)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_cut_inequality(g: WeightedGraph, t: TreeSample, cuts, weights=None) -> CutReport:
    """Check cap(E(S)) <= C_T(E_T(S)) <= load_T(E(S)) for every cut S."""
    c = _require_caps(g)
    ct = tree_capacities(g, t)
    rep = congestion_report(g, t, TerminalSet([0]), weights)
    eu = np.array([u for u, _, _ in g.edges], dtype=int)
    ev = np.array([v for _, v, _ in g.edges], dtype=int)
    tu = np.array([u for u, _, _ in t.edges], dtype=int)
    tv = np.array([v for _, v, _ in t.edges], dtype=int)
    worst_l = worst_r = math.inf
    bad = []
    count = 0
    for s in cuts:
        side = np.zeros(g.n, dtype=bool)
        side[list(s)] = True
        cross_g = side[eu] != side[ev]
        cross_t = side[tu] != side[tv]
        left = float(c[cross_g].sum())
        mid = float(ct[cross_t].sum())
        right = float(rep.load[cross_g].sum())
        worst_l = min(worst_l, mid - left)
        worst_r = min(worst_r, right - mid)
        if not (leq(left, mid) and leq(mid, right)):
            bad.append((sorted(int(x) for x in s), left, mid, right))
        count += 1
    return CutReport(count, worst_l, worst_r, bad)


# ---------------------------------------------------------------------------
# tree distributions


@dataclass
class TreeDistribution:
    trees: list[TreeSample]
    probs: list[float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.trees) != len(self.probs):
            raise ValueError("one probability per tree")
        if any(p <= 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, rel_tol=1e-9):
            raise ValueError("probabilities must be positive and sum to 1")

    def save(self, path) -> None:
        os.makedirs(path, exist_ok=True)
        files = []
        for i, t in enumerate(self.trees):
            name = f"tree_{i:04d}.txt"
            with open(os.path.join(path, name), "w") as fh:
                fh.write(format_graph(t.as_graph(), comments=[f"kind: {t.kind}"]))
            files.append(name)
        manifest = {"files": files, "probabilities": self.probs, **self.meta}
        with open(os.path.join(path, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "TreeDistribution":
        with open(os.path.join(path, "manifest.json")) as fh:
            manifest = json.load(fh)
        trees = []
        for name in manifest.pop("files"):
            with open(os.path.join(path, name)) as fh:
                text = fh.read()
            kind = "spanning"
            for line in text.splitlines():
                if line.startswith("# kind:"):
                    kind = line.split(":", 1)[1].strip()
            tg, _ = parse_graph(text)
            trees.append(TreeSample(tg.n, list(tg.edges), kind))
        probs = manifest.pop("probabilities")
        return cls(trees, probs, manifest)


@dataclass
class MwuResult:
    distribution: TreeDistribution
    mean_cong: np.ndarray
    alpha_hat: float
    beta_hat: float
    alpha_target: float
    beta_target: float
    history: list = field(default_factory=list)


def mwu_congestion_distribution(g: WeightedGraph, terms: TerminalSet, iters: int = 64, rng=None,
                                slack: float = 1.0, eta: float | None = None) -> MwuResult:
    """Multiplicative-weights tree distribution with small terminal congestion.

    Each round turns the current edge multipliers into weights
    kappa * lambda / c, draws a terminal-first random ultrametric of the
    resulting metric, strips its Steiner nodes and measures congestion;
    edges that were congested get heavier multipliers. The output is
    uniform over the sampled trees.
    """
    c = _require_caps(g)
    g.require_connected()
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(rng)
    n, k = g.n, len(terms)
    env_t, env_a = frt_envelopes(n, k)
    alpha_t, beta_t = slack * env_t, slack * env_a
    ek = terminal_edge_mask(g, terms)
    kappa = np.where(ek, 1.0 / alpha_t, 1.0 / beta_t)
    lam = np.full(g.m, 1.0 / g.m)
    trees, congs, history = [], [], []
    running_max = 0.0
    for r in range(iters):
        w = kappa * lam / c
        metric = shortest_path_metric(g, w)
        tree = remove_steiner(sample_frt(metric, terms, rng))
        tree.meta["round"] = r
        rep = congestion_report(g, tree, terms, w)
        trees.append(tree)
        congs.append(rep.cong)
        gain = kappa * rep.cong
        running_max = max(running_max, float(gain.max()))
        step = eta if eta is not None else (0.5 / running_max if running_max > 0 else 0.5)
        lam = lam * np.exp(step * gain)
        lam /= lam.sum()
        if not (np.all(np.isfinite(lam)) and np.all(lam > 0)):
            raise FloatingPointError("edge multipliers left the positive finite range")
        history.append({"round": r, "alpha": rep.alpha_hat, "beta": rep.beta_hat})
    mean = np.mean(congs, axis=0)
    a_hat = float(mean[ek].max()) if ek.any() else 0.0
    b_hat = float(mean.max())
    probs = [1.0 / iters] * iters
    dist = TreeDistribution(trees, probs, {"alpha_hat": a_hat, "beta_hat": b_hat,
                                           "alpha_target": alpha_t, "beta_target": beta_t,
                                           "rounds": iters})
    return MwuResult(dist, mean, a_hat, b_hat, alpha_t, beta_t, history)


# ---------------------------------------------------------------------------
# min bisection


def _bisection_dp(n, children, order, cap_to_parent, allowed, half):
    """Min cut with exactly ``half`` vertices on side 0 under per-vertex side restrictions."""
    inf = math.inf
    dp: list = [None] * n
    for v in reversed(order):
        # table[s][a] = min cost inside subtree(v), v on side s, a vertices on side 0
        table = []
        for s in (0, 1):
            arr = np.full(2, inf)
            if s in allowed[v]:
                arr[1 if s == 0 else 0] = 0.0
            table.append(arr)
        for ch in children[v]:
            cc = cap_to_parent[ch]
            sub = dp[ch]
            new = []
            for s in (0, 1):
                best_child = np.minimum(sub[s], sub[1 - s] + cc)
                cur = table[s]
                out = np.full(len(cur) + len(best_child) - 1, inf)
                for a1 in np.flatnonzero(np.isfinite(cur)):
                    cand = cur[a1] + best_child
                    seg = out[a1:a1 + len(best_child)]
                    np.minimum(seg, cand, out=seg)
                new.append(out)
            table = new
            dp[ch] = None
        dp[v] = table
    root = order[0]
    return min(dp[root][0][half], dp[root][1][half])


def min_bisection_tree(t: TreeSample, caps) -> tuple[list[int], float]:
    """Exact minimum bisection of a tree under edge capacities ``caps`` (``t.edges`` order).

    Returns the lexicographically smallest optimal side (it contains 0).
    """
    n = t.n
    if n % 2:
        raise ValueError("bisection needs an even vertex count")
    if not t.is_tree():
        raise GraphError("not a tree")
    half = n // 2
    parent, _, order = t.rooted(0)
    children: list[list[int]] = [[] for _ in range(n)]
    for x in order[1:]:
        children[parent[x]].append(x)
    cap_of = {}
    for j, (u, v, _) in enumerate(t.edges):
        cap_of[(u, v)] = cap_of[(v, u)] = float(caps[j])
    cap_to_parent = [cap_of[(x, parent[x])] if parent[x] >= 0 else 0.0 for x in range(n)]
    allowed = [{0, 1} for _ in range(n)]
    allowed[0] = {0}
    best = _bisection_dp(n, children, order, cap_to_parent, allowed, half)
    for v in range(1, n):
        allowed[v] = {0}
        val = _bisection_dp(n, children, order, cap_to_parent, allowed, half)
        if not (val <= best + 1e-12 * max(1.0, abs(best))):
            allowed[v] = {1}
    side = [v for v in range(n) if allowed[v] == {0}]
    cost = sum(cap_of[(u, v)] for u, v, _ in t.edges if (u in side) != (v in side))
    return side, float(cost)


def cut_value(g: WeightedGraph, side) -> float:
    c = _require_caps(g)
    s = np.zeros(g.n, dtype=bool)
    s[list(side)] = True
    eu = np.array([u for u, _, _ in g.edges], dtype=int)
    ev = np.array([v for _, v, _ in g.edges], dtype=int)
    return float(c[s[eu] != s[ev]].sum())


def is_vertex_cover(g: WeightedGraph, terms: TerminalSet) -> bool:
    return all(u in terms or v in terms for u, v, _ in g.edges)


@dataclass
class BisectionResult:
    side: list[int]
    value: float
    optimum: float | None
    ratio: float | None
    trees: int


def min_bisection_approx(g: WeightedGraph, terms: TerminalSet, rounds: int = 32, rng=None,
                         exact_limit: int = 14) -> BisectionResult:
    """Best tree bisection over an MWU tree distribution (plus an MST of g), evaluated in g.

    When n <= ``exact_limit`` the exhaustive optimum and the ratio are included.
    """
    _require_caps(g)
    if g.n % 2:
        raise ValueError("bisection needs an even vertex count")
    if not is_vertex_cover(g, terms):
        raise ValueError("terminals must form a vertex cover of the graph")
    res = mwu_congestion_distribution(g, terms, rounds, rng)
    best_side, best_val = None, math.inf
    # one spanning tree of g joins the candidates; it makes tree inputs exact
    for t in [*res.distribution.trees, mst(g)]:
        side, _ = min_bisection_tree(t, tree_capacities(g, t))
        val = cut_value(g, side)
        if val < best_val or (val == best_val and side < best_side):
            best_side, best_val = side, val
    opt = ratio = None
    if g.n <= exact_limit:
        from .oracles import brute_force_min_bisection
        _, opt = brute_force_min_bisection(g)
        ratio = best_val / opt if opt > 0 else (1.0 if best_val == 0 else math.inf)
    return BisectionResult(best_side, best_val, opt, ratio, len(res.distribution.trees))
