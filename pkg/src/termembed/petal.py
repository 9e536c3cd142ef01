"""Petal decomposition: random spanning trees with terminal-first carving.

A cluster X with center x0 is carved into petals, each a union of
cone-metric balls along a shortest path from x0 to a target. Terminal
targets are served first; the leftover "stigma" keeps x0. Recursing on
every piece and joining the pieces by one edge each yields a spanning tree.

Petal membership uses a score: u lies in W_r exactly when

    min over path vertices p of  d(p, t) + 2 * rho_p(p, u)  <=  r,

with rho_p(p, u) = d(x0, p) + d(p, u) - d(x0, u). Because p sits on a
shortest x0-t path, d(x0, p) = D - d(p, t) (D = d(x0, t)), so

    score(u) = 2D - 2 d(x0, u) + 2 min_p [ d(p, u) - d(p, t) / 2 ],

one multi-source Dijkstra with negative start values.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import REL_TOL, TerminalSet, TreeSample, WeightedGraph, dijkstra, distance_matrix

_TOL = 1e-12


# ---------------------------------------------------------------------------
# cone metric and petal sets (direct definitions)


def _dists(g: WeightedGraph, cluster, source, weights=None) -> dict[int, float]:
    w = g.weights if weights is None else weights
    return dijkstra(g.adj, w, source, allowed=set(cluster))[0]


def cone_distance(dx: dict, dy: dict, u: int, v: int) -> float:
    """rho(X, x, y)(u, v) from the distance maps of apex x and tip y."""
    return abs((dx[u] - dy[u]) - (dx[v] - dy[v]))


def cone_ball(g: WeightedGraph, y_cluster, x0: int, p: int, radius: float, weights=None) -> set[int]:
    """{u in Y : rho(Y, x0, p)(p, u) <= radius}, i.e. the detour through p costs at most ``radius``."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    dx = _dists(g, y_cluster, x0, weights)
    dp = _dists(g, y_cluster, p, weights)
    tol = REL_TOL * max(1.0, max(dx.values()))
    return {u for u in dx if cone_distance(dx, dp, p, u) <= radius + tol}


def shortest_path_in(g: WeightedGraph, cluster, a: int, b: int, weights=None) -> list[int]:
    w = g.weights if weights is None else weights
    dist, pred, _ = dijkstra(g.adj, w, a, allowed=set(cluster))
    if b not in dist:
        raise ValueError(f"{b} unreachable from {a} inside the cluster")
    out = [b]
    while out[-1] != a:
        out.append(pred[out[-1]])
    return out[::-1]


def petal_set(g: WeightedGraph, y_cluster, x0: int, t: int, r: float, weights=None) -> set[int]:
    """W_r(Y, x0, t) as a union of cone balls along the x0-t shortest path."""
    path = shortest_path_in(g, y_cluster, x0, t, weights)
    dt = _dists(g, y_cluster, t, weights)
    tol = REL_TOL * max(1.0, max(dt.values()))
    out: set[int] = set()
    for p in path:
        if dt[p] <= r + tol:
            out |= cone_ball(g, y_cluster, x0, p, (r - dt[p]) / 2, weights)
    return out


# ---------------------------------------------------------------------------
# scores


@dataclass
class PetalScores:
    path: list[int]  # x0 ... t
    d0: dict  # distances from x0 inside Y
    score: dict  # u -> smallest r with u in W_r
    D: float

    def members(self, r: float) -> set[int]:
        tol = _TOL * max(1.0, self.D)
        return {u for u, s in self.score.items() if s <= r + tol}

    def count(self, r: float, subset=None) -> int:
        tol = _TOL * max(1.0, self.D)
        if subset is None:
            return sum(1 for s in self.score.values() if s <= r + tol)
        return sum(1 for u in subset if u in self.score and self.score[u] <= r + tol)


def petal_scores(adj, weights, y_set, x0: int, t: int) -> PetalScores:
    d0, pred, _ = dijkstra(adj, weights, x0, allowed=y_set)
    if t not in d0:
        raise ValueError(f"target {t} unreachable from {x0}")
    path = [t]
    while path[-1] != x0:
        path.append(pred[path[-1]])
    path.reverse()
    big_d = d0[t]
    init = [-(big_d - d0[p]) / 2 for p in path]
    m, _, _ = dijkstra(adj, weights, path, allowed=y_set, init=init)
    score = {u: 2 * big_d - 2 * d0[u] + 2 * m[u] for u in d0}
    for p in path:
        score[p] = big_d - d0[p]
    return PetalScores(path, d0, score, big_d)


# ---------------------------------------------------------------------------
# interval rules and create-petal


def reform_branch(sc: PetalScores, k_set, lo: float, hi: float) -> tuple[str, tuple[float, float]]:
    alpha = hi - lo
    ks = [v for v in k_set if v in sc.score]
    if all(v in sc.score and sc.score[v] <= lo + 3 * alpha / 5 + _TOL * max(1.0, sc.D) for v in k_set):
        return "all", (lo + 4 * alpha / 5, hi)
    if sc.count(lo + 2 * alpha / 5, ks) == 0:
        return "none", (lo, lo + alpha / 5)
    return "mixed", (lo + 2 * alpha / 5, lo + 3 * alpha / 5)


def reform_interval(g: WeightedGraph, y_cluster, t: int, x0: int, interval, k_set, weights=None):
    """Shrink [lo, hi] to a fifth according to how many terminals W_r holds."""
    lo, hi = interval
    if not hi > lo:
        raise ValueError("interval must satisfy hi > lo")
    w = g.weights if weights is None else weights
    sc = petal_scores(g.adj, w, set(y_cluster), x0, t)
    return reform_branch(sc, k_set, lo, hi)[1]


def loglog_levels(count: int) -> int:
    """max(1, ceil(log2 log2 count)); small counts have no positive log-log."""
    if count <= 2:
        return 1
    return max(1, math.ceil(math.log2(math.log2(count))))


def truncated_exponential(lam: float, a: float, b: float, u: float) -> float:
    """Inverse CDF of density lam e^{-lam r} / (e^{-lam a} - e^{-lam b}) on [a, b]."""
    span = b - a
    if lam * span < 1e-12:
        return a + u * span
    return a - math.log1p(-u * (-math.expm1(-lam * span))) / lam


def truncated_exponential_pdf(lam: float, a: float, b: float, r):
    r = np.asarray(r, dtype=float)
    return lam * np.exp(-lam * (r - a)) / (-math.expm1(-lam * (b - a)))


@dataclass
class PetalRecord:
    kind: str  # first / terminal / nonterminal
    target: int
    interval: tuple
    reformed: tuple | None
    branch: str | None
    q: int
    levels: int
    a: float
    b: float
    chi_hat: float
    lam: float
    r: float
    connector: tuple  # (y_j, x_j)
    size: int


def _create_petal(sc: PetalScores, x_count: int, interval, k_set, rng, n_total: int, k_total: int,
                  kind: str) -> tuple[set[int], int, int, PetalRecord]:
    lo, hi = interval
    branch = reformed = None
    if k_set:
        branch, (lo, hi) = reform_branch(sc, k_set, lo, hi)
        reformed = (lo, hi)
        big_l = loglog_levels(k_total)
        logc = math.log2(k_total) if k_total > 1 else 0.0
        ks = list(k_set)

        def size(r):
            return sc.count(r, ks)
    else:
        big_l = loglog_levels(n_total)
        logc = math.log2(n_total) if n_total > 1 else 0.0

        def size(r):
            return sc.count(r)
    big_r = hi - lo
    q = None
    for cand in range(1, big_l + 1):
        bound = 2 * x_count / 2 ** (logc ** (1 - cand / big_l))
        if size(lo + cand * big_r / big_l) <= bound:
            q = cand
            break
    if q is None:
        raise AssertionError("no admissible q; W cannot exceed the cluster")
    a = lo + (q - 1) * big_r / big_l
    b = a + big_r / (2 * big_l)
    chi = (x_count + 1) / max(1, size(a))
    chi_hat = max(chi, math.e)
    lam = 2 * math.log(chi_hat) / (b - a)
    r = truncated_exponential(lam, a, b, float(rng.random()))
    members = sc.members(r)
    # connector: path vertex closest to x0 that W_r contains
    idx = next(i for i, p in enumerate(sc.path) if sc.score[p] <= r + _TOL * max(1.0, sc.D))
    if idx == 0:
        raise AssertionError("petal swallowed the center")
    xj, yj = sc.path[idx], sc.path[idx - 1]
    rec = PetalRecord(kind, sc.path[-1], tuple(interval), reformed, branch, q, big_l, a, b, chi_hat, lam, r,
                      (yj, xj), len(members))
    return members, xj, yj, rec


def create_petal(g: WeightedGraph, x_cluster, y_cluster, t: int, x0: int, interval, k_set, rng=None,
                 weights=None, n_total: int | None = None, k_total: int | None = None):
    """Carve one petal around ``t``; returns (petal, x_j, y_j, record)."""
    rng = np.random.default_rng(rng)
    w = g.weights if weights is None else weights
    sc = petal_scores(g.adj, w, set(y_cluster), x0, t)
    kx = [v for v in (k_set or []) if v in set(x_cluster)]
    x_count = len(kx) if k_set else len(x_cluster)
    n_total = g.n if n_total is None else n_total
    k_total = max(1, len(k_set or [])) if k_total is None else k_total
    ks = [v for v in (k_set or []) if v in sc.score]
    return _create_petal(sc, x_count, interval, ks, rng, n_total, k_total, "terminal" if k_set else "nonterminal")


# ---------------------------------------------------------------------------
# one level


@dataclass
class Checks:
    radius_ratio: float = 0.0  # worst child radius / parent radius
    halved_once: bool = True
    reform_contained: bool = True
    ball_avoidance: bool = True
    x0_distances: bool = True
    groups_intact: bool = True
    w_lipschitz: bool = True
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.radius_ratio <= 7 / 8 + 1e-9 and self.halved_once and self.reform_contained
                and self.ball_avoidance and self.x0_distances and self.groups_intact and self.w_lipschitz)

    def merge(self, other: "Checks") -> None:
        self.radius_ratio = max(self.radius_ratio, other.radius_ratio)
        for name in ("halved_once", "reform_contained", "ball_avoidance", "x0_distances", "groups_intact",
                     "w_lipschitz"):
            setattr(self, name, getattr(self, name) and getattr(other, name))
        self.violations.extend(other.violations)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


@dataclass
class Decomposition:
    children: list[list[int]]  # X_0 (stigma) first, then petals X_1..X_s
    centers: list[int]
    targets: list[int]
    connectors: list[tuple[int, int]]  # (y_j, x_j) for j >= 1
    records: list[PetalRecord]
    radius: float


class _State:
    def __init__(self, g: WeightedGraph, terms, instrument: bool, claim_checks: bool):
        self.g = g
        self.adj = g.adj
        self.ww = np.array(g.weights, dtype=float)  # working weights, halved in place
        self.halvings = np.zeros(g.m, dtype=int)
        self.terms = set(terms)
        self.n = g.n
        self.k = max(1, len(self.terms))
        self.instrument = instrument
        self.claim_checks = claim_checks
        self.checks = Checks()

    def fail(self, name: str, info) -> None:
        if name != "radius_ratio":
            setattr(self.checks, name, False)
        self.checks.violations.append({"check": name, **info})


def _halve(state: _State, lw: np.ndarray, path: list[int], xj: int) -> None:
    """Halve the subpath from x_j to the target; zero (contracted) edges are left alone."""
    g = state.g
    start = path.index(xj)
    for a, b in zip(path[start:], path[start + 1:]):
        e = g.eid(a, b)
        if lw[e] == 0:
            continue
        lw[e] /= 2
        state.ww[e] /= 2
        state.halvings[e] += 1
        if state.halvings[e] > 1:
            state.fail("halved_once", {"edge": g.edges[e][:2]})


def _petal_decomposition(state: _State, x: list[int], x0: int, t: int, lw: np.ndarray, rng) -> Decomposition:
    adj = state.adj
    xset = set(x)
    kx = sorted(v for v in x if v in state.terms)
    d0, _, _ = dijkstra(adj, lw, x0, allowed=xset)
    if len(d0) != len(x):
        raise AssertionError("cluster is not connected")
    delta = max(d0.values())
    tol = _TOL * max(1.0, delta)
    y = set(x)
    children, centers, targets, connectors, records = [], [], [], [], []
    state.level_start = lw.copy()
    # first petal around the given target
    big_d = d0[t]
    if big_d >= 5 * delta / 8 - tol and big_d > 0:
        sc = petal_scores(adj, lw, y, x0, t)
        members, xj, yj, rec = _create_petal(sc, len(kx) if kx else len(x), (big_d - 5 * delta / 8, big_d - delta / 2),
                                             kx, rng, state.n, state.k, "first")
        _record_petal(state, rec, members, y, children, centers, targets, connectors, records, xj, yj, t)
        t0 = yj
    else:
        t0 = t
    # terminal petals
    while True:
        far = [v for v in kx if v in y and d0[v] > 3 * delta / 4 + tol]
        if not far:
            break
        tj = far[0]
        sc = petal_scores(adj, lw, y, x0, tj)
        ky = [v for v in kx if v in y]
        members, xj, yj, rec = _create_petal(sc, len(kx), (0.0, delta / 8), ky, rng, state.n, state.k, "terminal")
        _record_petal(state, rec, members, y, children, centers, targets, connectors, records, xj, yj, tj)
        _halve(state, lw, sc.path, xj)
        if state.instrument:
            _check_x0_distances(state, lw, y, x0, d0)
    # non-terminal petals
    while True:
        far = sorted(v for v in y if d0[v] > 7 * delta / 8 + tol)
        if not far:
            break
        tj = far[0]
        sc = petal_scores(adj, lw, y, x0, tj)
        ky_before = [v for v in kx if v in y]
        members, xj, yj, rec = _create_petal(sc, len(x), (0.0, delta / 32), [], rng, state.n, state.k,
                                             "nonterminal")
        if state.instrument and ky_before:
            # distances in X as they stood when the level began
            dk = dijkstra(adj, state.level_start, ky_before, allowed=xset)[0]
            near = [u for u in members if dk.get(u, math.inf) <= delta / 16 + tol]
            if near:
                state.fail("ball_avoidance", {"petal_target": tj, "vertices": sorted(near)[:5]})
        _record_petal(state, rec, members, y, children, centers, targets, connectors, records, xj, yj, tj)
        _halve(state, lw, sc.path, xj)
        if state.instrument:
            _check_x0_distances(state, lw, y, x0, d0)
    stigma = sorted(y)
    if t0 not in y:
        raise AssertionError("stigma lost its target")
    out_children = [stigma] + children
    return Decomposition(out_children, [x0] + centers, [t0] + targets, connectors, records, delta)


def _record_petal(state, rec, members, y, children, centers, targets, connectors, records, xj, yj, tj):
    if state.instrument and rec.reformed is not None:
        lo, hi = rec.interval
        rlo, rhi = rec.reformed
        if not (lo - _TOL <= rlo <= rhi <= hi + _TOL):
            state.fail("reform_contained", {"interval": rec.interval, "reformed": rec.reformed})
    if state.instrument and not (rec.a - 1e-12 <= rec.r <= rec.b + 1e-12):
        state.fail("reform_contained", {"radius_outside": [rec.a, rec.b, rec.r]})
    y -= members
    children.append(sorted(members))
    centers.append(xj)
    targets.append(tj)
    connectors.append((yj, xj))
    records.append(rec)


def _check_x0_distances(state, lw, y, x0, d0) -> None:
    dy, _, _ = dijkstra(state.adj, lw, x0, allowed=y)
    for z in y:
        if z not in dy or abs(dy[z] - d0[z]) > 1e-9 * max(1.0, d0[z]):
            state.fail("x0_distances", {"vertex": z})
            return


def petal_decomposition(g: WeightedGraph, x_cluster, x0: int, t: int, k_set, rng=None, weights=None,
                        instrument: bool = True) -> tuple[Decomposition, Checks]:
    """One level of carving on G[X]; the caller's weights are not modified."""
    rng = np.random.default_rng(rng)
    state = _State(g, k_set or [], instrument, False)
    if weights is not None:
        state.ww = np.array(weights, dtype=float)
    lw = state.ww.copy()
    dec = _petal_decomposition(state, sorted(x_cluster), x0, t, lw, rng)
    return dec, state.checks


# ---------------------------------------------------------------------------
# contraction and the separation predicate


def terminals_separated(adj, weights, x: list[int], x0: int, t: int, kx: list[int]) -> bool:
    """Dry run of the first terminal-relevant reform decisions (no radius sampling)."""
    if len(kx) < 2:
        return False
    xset = set(x)
    d0, _, _ = dijkstra(adj, weights, x0, allowed=xset)
    delta = max(d0.values())
    tol = _TOL * max(1.0, delta)
    big_d = d0[t]
    if big_d >= 5 * delta / 8 - tol and big_d > 0:
        sc = petal_scores(adj, weights, xset, x0, t)
        branch, _ = reform_branch(sc, kx, big_d - 5 * delta / 8, big_d - delta / 2)
        if branch == "all":
            return False
        if branch == "mixed":
            return True
    far = [v for v in kx if d0[v] > 3 * delta / 4 + tol]
    if not far:
        return False
    sc = petal_scores(adj, weights, xset, x0, far[0])
    branch, _ = reform_branch(sc, kx, 0.0, delta / 8)
    return branch != "all"


def _grow(adj, ww, lw, center, radius, allowed, absorbed) -> list[int]:
    """Absorb every unabsorbed vertex within ``radius`` of ``center`` (paths through unabsorbed vertices)."""
    dist = {center: 0.0}
    pred_edge = {}
    heap = [(0.0, center)]
    done = set()
    while heap:
        dx, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, e in adj[u]:
            if v not in allowed or v in absorbed or v in done:
                continue
            nd = dx + ww[e]
            if nd <= radius and nd < dist.get(v, math.inf):
                dist[v] = nd
                pred_edge[v] = e
                heapq.heappush(heap, (nd, v))
    for v, e in pred_edge.items():
        lw[e] = 0.0
    return sorted(done)


def contract_balls(state: _State, x: list[int], x0: int, t: int, lw: np.ndarray, delta: float,
                   separated: bool) -> list[list[int]]:
    """Zero the weights of ball-growth edges so each ball acts as one supernode."""
    xset = set(x)
    absorbed: set[int] = set()
    groups = []
    order = []
    if separated:
        order += [(v, delta / state.k ** 3) for v in x if v in state.terms]
    order += [(v, delta / state.n ** 3) for v in x]
    for v, radius in order:
        if v in absorbed:
            continue
        members = _grow(state.adj, state.ww, lw, v, radius, xset, absorbed)
        if len(members) > 1:
            absorbed.update(members)
            groups.append(members)
    return groups


# ---------------------------------------------------------------------------
# hierarchy


@dataclass
class HierarchyNode:
    cluster: list[int]
    center: int
    target: int
    level: int
    path: tuple
    radius: float = 0.0
    separated: bool = False
    groups: int = 0
    petals: list = field(default_factory=list)
    children: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"cluster": self.cluster, "center": self.center, "target": self.target, "level": self.level,
                "radius": self.radius, "separated": self.separated, "contracted_groups": self.groups,
                "petals": [asdict(p) for p in self.petals],
                "children": [c.to_dict() for c in self.children]}


def _child_rng(seed: int, path: tuple) -> np.random.Generator:
    return np.random.default_rng([seed, *path])


def _radius(adj, w, x: list[int], center: int) -> float:
    d, _, _ = dijkstra(adj, w, center, allowed=set(x))
    if len(d) != len(x):
        return math.inf
    return max(d.values())


def hierarchical_petal_tree(g: WeightedGraph, terms: TerminalSet, rng=None, root: int | None = None,
                            instrument: bool = True, claim_checks: bool = False,
                            contract: bool = True) -> TreeSample:
    """Random spanning tree of g from recursive petal decompositions.

    ``meta`` carries the hierarchy (``hierarchy``), the instrumented checks
    (``checks``) and the radius audit (``radius``, ``radius_bound``).
    """
    g.require_connected()
    rng = np.random.default_rng(rng)
    seed = int(rng.integers(0, 2 ** 63 - 1))
    x0 = min(terms) if root is None else root
    state = _State(g, terms, instrument, claim_checks)
    top = HierarchyNode(list(range(g.n)), x0, x0, 0, ())
    edges: list[int] = []
    stack = [top]
    while stack:
        node = stack.pop()
        x = node.cluster
        if len(x) == 1:
            continue
        kx = [v for v in x if v in state.terms]
        node.radius = _radius(state.adj, state.ww, x, node.center)
        lw = state.ww.copy()
        if contract:
            node.separated = terminals_separated(state.adj, state.ww, x, node.center, node.target, kx)
            groups = contract_balls(state, x, node.center, node.target, lw, node.radius, node.separated)
            node.groups = len(groups)
        else:
            groups = []
        crng = _child_rng(seed, node.path)
        dec = _petal_decomposition(state, x, node.center, node.target, lw, crng)
        if claim_checks and len(x) <= 64:
            _check_w_lipschitz(state, x, node.center, dec, state.level_start)
        node.petals = dec.records
        for yj, xj in dec.connectors:
            edges.append(g.eid(yj, xj))
        if instrument:
            owner = {}
            for j, ch in enumerate(dec.children):
                for u in ch:
                    owner[u] = j
            for grp in groups:
                if len({owner[u] for u in grp}) > 1:
                    state.fail("groups_intact", {"group": grp[:5]})
            for ch, c in zip(dec.children, dec.centers):
                rad = _radius(state.adj, lw, ch, c)
                ratio = rad / dec.radius if dec.radius > 0 else 0.0
                if ratio > 7 / 8 + 1e-9:
                    state.fail("radius_ratio", {"cluster_size": len(ch), "ratio": ratio})
                state.checks.radius_ratio = max(state.checks.radius_ratio, ratio)
        for j, (ch, c, tj) in enumerate(zip(dec.children, dec.centers, dec.targets)):
            child = HierarchyNode(ch, c, tj, node.level + 1, node.path + (j,))
            node.children.append(child)
            stack.append(child)
    tree = TreeSample(g.n, [g.edges[e] for e in edges], "spanning")
    if not tree.is_tree():
        raise AssertionError("connector edges do not form a spanning tree")
    k = len(terms)
    radius_g = _radius(g.adj, g.weights, list(range(g.n)), x0)
    radius_t = float(tree.distances_from(x0).max())
    bound = 8 * radius_g * math.exp(2 / k + 2 / g.n)
    tree.meta.update({"root": x0, "seed": seed, "hierarchy": top, "checks": state.checks,
                      "radius": radius_t, "graph_radius": radius_g, "radius_bound": bound,
                      "max_halvings": int(state.halvings.max()) if g.m else 0})
    return tree


def _check_w_lipschitz(state: _State, x, x0, dec: Decomposition, lw) -> None:
    """score(z) <= score(y) + 4 d_Y(y, z): the ball of radius l around W_r lies in W_{r+4l}."""
    g = state.g
    xs = sorted(x)
    pos = {v: i for i, v in enumerate(xs)}
    sub = [(pos[u], pos[v], lw[e]) for e, (u, v, _) in enumerate(g.edges) if u in pos and v in pos]
    if not sub:
        return
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    m = len(xs)
    rows = [a for a, b, _ in sub] + [b for a, b, _ in sub]
    cols = [b for a, b, _ in sub] + [a for a, b, _ in sub]
    vals = [w for _, _, w in sub] * 2
    # explicit zeros would vanish from a sparse matrix; a tiny positive stand-in keeps the edge
    vals = [v if v > 0 else 1e-300 for v in vals]
    d = shortest_path(csr_matrix((vals, (rows, cols)), shape=(m, m)), directed=False)
    for target in dec.targets[1:]:
        sc = petal_scores(state.adj, lw, set(xs), x0, target)
        s = np.array([sc.score[v] for v in xs])
        excess = s[None, :] - s[:, None] - 4 * d
        if excess.max() > 1e-9 * max(1.0, sc.D):
            state.fail("w_lipschitz", {"target": target})
            return


def hierarchy_json(tree: TreeSample) -> str:
    return json.dumps(tree.meta["hierarchy"].to_dict(), indent=1, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# Monte-Carlo


@dataclass
class SpanningReport:
    samples: int
    terminal_mean: float
    terminal_stderr: float
    all_mean: float
    all_stderr: float
    terminal_max_pair_mean: float
    all_max_pair_mean: float
    checks: Checks
    radius_ok: bool
    worst_radius_ratio: float  # tree radius / bound
    separated_levels: int
    quiet_levels: int

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "checks"}
        d["checks"] = self.checks.as_dict()
        return d


def estimate_spanning_distortion(g: WeightedGraph, terms: TerminalSet, samples: int = 100, rng=None,
                                 claim_checks: bool = False) -> SpanningReport:
    """Mean stretch over sampled petal trees, split into terminal pairs and all pairs."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    dg = distance_matrix(g)
    n = g.n
    iu, ju = np.triu_indices(n, 1)
    base = dg[iu, ju]
    tmask = terms.mask(n)
    tp = tmask[iu] | tmask[ju]
    ratios = np.empty((samples, len(base)))
    checks = Checks()
    radius_ok = True
    worst = 0.0
    sep = quiet = 0
    for s in range(samples):
        tree = hierarchical_petal_tree(g, terms, rng, claim_checks=claim_checks)
        ratios[s] = tree.distance_matrix()[iu, ju] / base
        checks.merge(tree.meta["checks"])
        worst = max(worst, tree.meta["radius"] / tree.meta["radius_bound"])
        radius_ok = radius_ok and bool(tree.meta["radius"] <= tree.meta["radius_bound"] * (1 + 1e-9))
        stack = [tree.meta["hierarchy"]]
        while stack:
            node = stack.pop()
            if len(node.cluster) > 1:
                if node.separated:
                    sep += 1
                else:
                    quiet += 1
            stack.extend(node.children)

    def stats(mask):
        vals = ratios[:, mask]
        if vals.size == 0:
            return 1.0, 0.0, 1.0
        per = vals.mean(axis=1)
        se = float(per.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        return float(per.mean()), se, float(vals.mean(axis=0).max())

    tm, ts, tmax = stats(tp)
    am, as_, amax = stats(np.ones(len(base), dtype=bool))
    return SpanningReport(samples, tm, ts, am, as_, tmax, amax, checks, radius_ok, worst, sep, quiet)
