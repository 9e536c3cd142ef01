"""Graph and metric foundations.

Everything downstream is measured against the quantities defined here:
shortest-path metrics with a fixed tie-break, induced terminal metrics,
distortion reports and lightness.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

REL_TOL = 1e-9


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    def __init__(self, u: int, v: int):
        super().__init__(f"graph is disconnected: no path between {u} and {v}")
        self.pair = (u, v)


def close(a: float, b: float, tol: float = REL_TOL) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def leq(a: float, b: float, tol: float = REL_TOL) -> bool:
    """a <= b up to a tolerance relative to b (an infinite a never passes a finite b)."""
    if math.isinf(b):
        return a <= b
    return a <= b + tol * max(1.0, abs(b))


class WeightedGraph:
    """Undirected graph with strictly positive edge weights.

    Edges are stored canonically as ``(u, v, w)`` with ``u < v``, sorted by
    ``(u, v)``; an edge's id is its index in that order. Parallel edges
    collapse to the lightest copy.
    """

    def __init__(self, n: int, edges: Iterable[Sequence], capacities: bool | None = None):
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        best: dict[tuple[int, int], tuple[float, float | None]] = {}
        has_cap = None
        for e in edges:
            u, v, w = int(e[0]), int(e[1]), float(e[2])
            c = float(e[3]) if len(e) > 3 and e[3] is not None else None
            if has_cap is None:
                has_cap = c is not None
            elif has_cap != (c is not None):
                raise GraphError("either every edge carries a capacity or none does")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not (w > 0 and math.isfinite(w)):
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
            if c is not None and not (c > 0 and math.isfinite(c)):
                raise GraphError(f"edge ({u}, {v}) has non-positive capacity {c}")
            key = (u, v) if u < v else (v, u)
            if key not in best or w < best[key][0]:
                best[key] = (w, c)
        if capacities is not None and has_cap is not None and capacities != has_cap:
            raise GraphError("capacity flag does not match edge data")
        self.n = n
        keys = sorted(best)
        self.edges: tuple[tuple[int, int, float], ...] = tuple((u, v, best[(u, v)][0]) for u, v in keys)
        self.capacities: tuple[float, ...] | None = (
            tuple(best[k][1] for k in keys) if has_cap else None
        )
        self.edge_id = {(u, v): i for i, (u, v, _) in enumerate(self.edges)}
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for i, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, i))
            adj[v].append((u, i))
        for lst in adj:
            lst.sort()
        self.adj = tuple(tuple(lst) for lst in adj)
        self._weights = np.array([w for _, _, w in self.edges], dtype=float)
        self._weights.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edge_id

    def eid(self, u: int, v: int) -> int:
        return self.edge_id[(u, v) if u < v else (v, u)]

    def weight(self, u: int, v: int) -> float:
        return self.edges[self.eid(u, v)][2]

    def capacity(self, i: int) -> float:
        if self.capacities is None:
            raise GraphError("graph has no capacities")
        return self.capacities[i]

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def with_capacities(self, caps: Sequence[float]) -> "WeightedGraph":
        return WeightedGraph(self.n, [(u, v, w, c) for (u, v, w), c in zip(self.edges, caps)])

    def with_weights(self, weights: Sequence[float]) -> "WeightedGraph":
        caps = self.capacities or [None] * self.m
        return WeightedGraph(self.n, [(u, v, w, c) for (u, v, _), w, c in zip(self.edges, weights, caps)])

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y, _ in self.adj[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def require_connected(self) -> None:
        comps = self.components()
        if len(comps) > 1:
            raise DisconnectedGraphError(comps[0][0], comps[1][0])

    def csr(self, weights: Sequence[float] | None = None) -> csr_matrix:
        w = self._weights if weights is None else np.asarray(weights, dtype=float)
        if self.m == 0:
            return csr_matrix((self.n, self.n))
        u = np.array([e[0] for e in self.edges])
        v = np.array([e[1] for e in self.edges])
        return csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                          shape=(self.n, self.n))

    def __repr__(self) -> str:
        cap = ", capacitated" if self.capacities else ""
        return f"WeightedGraph(n={self.n}, m={self.m}{cap})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, WeightedGraph) and self.n == other.n and self.edges == other.edges
                and self.capacities == other.capacities)

    def __hash__(self):
        return hash((self.n, self.edges))


class FiniteMetric:
    """Dense symmetric distance matrix over points ``0..n-1``."""

    def __init__(self, d, check: bool = True):
        d = np.array(d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if check:
            if np.any(d < 0) or not np.all(np.isfinite(d)):
                raise ValueError("distances must be finite and nonnegative")
            if np.any(np.diag(d) != 0):
                raise ValueError("d(x, x) must be 0")
            if not np.allclose(d, d.T, rtol=REL_TOL, atol=0):
                raise ValueError("distance matrix is not symmetric")
        d.setflags(write=False)
        self.d = d

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __call__(self, x: int, y: int) -> float:
        return float(self.d[x, y])

    def distance_matrix(self) -> np.ndarray:
        return self.d

    def diameter(self) -> float:
        return float(self.d.max()) if self.n else 0.0

    def ball(self, x: int, r: float) -> np.ndarray:
        return np.flatnonzero(self.d[x] <= r)

    def dist_to_set(self, x, subset: Sequence[int]) -> np.ndarray:
        return self.d[np.atleast_1d(x)][:, list(subset)].min(axis=1)

    def triangle_violation(self, max_triples: int = 100_000, rng=None) -> float:
        """Largest relative violation of the triangle inequality found.

        Exhaustive when n <= 64, otherwise ``max_triples`` sampled triples.
        """
        d, n = self.d, self.n
        if n < 3:
            return 0.0
        if n <= 64:
            # d[x,z] - (d[x,y] + d[y,z]) over all y, vectorised per x
            worst = 0.0
            for x in range(n):
                via = (d[x][:, None] + d).min(axis=0)
                excess = d[x] - via
                scale = np.maximum(1.0, d[x])
                worst = max(worst, float((excess / scale).max()))
            return max(worst, 0.0)
        rng = np.random.default_rng(rng)
        x, y, z = rng.integers(0, n, size=(3, max_triples))
        excess = d[x, z] - d[x, y] - d[y, z]
        return max(0.0, float((excess / np.maximum(1.0, d[x, z])).max()))

    def is_metric(self) -> bool:
        return self.triangle_violation() <= REL_TOL


@dataclass(frozen=True)
class TerminalSet:
    ids: tuple[int, ...]

    def __init__(self, ids: Iterable[int], n: int | None = None):
        ids = tuple(sorted(int(i) for i in ids))
        if not ids:
            raise ValueError("terminal set must be nonempty")
        if len(set(ids)) != len(ids):
            raise ValueError("terminal ids must be distinct")
        if n is not None:
            if ids[0] < 0 or ids[-1] >= n:
                raise ValueError(f"terminal id out of range for n={n}")
            if 2 * len(ids) > n:
                warnings.warn(f"|K|={len(ids)} exceeds n/2={n / 2}", stacklevel=2)
        object.__setattr__(self, "ids", ids)

    @property
    def k(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, x) -> bool:
        return x in self._set

    @property
    def _set(self) -> frozenset:
        s = self.__dict__.get("_s")
        if s is None:
            s = frozenset(self.ids)
            object.__setattr__(self, "_s", s)
        return s

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.ids)] = True
        return m


# ---------------------------------------------------------------------------
# trees


@dataclass
class TreeSample:
    """A tree over points ``0..n-1``.

    ``kind`` is ``"spanning"`` when every edge is an edge of the source graph
    with the same weight, ``"dominating"`` for trees that only dominate the
    source metric.
    """

    n: int
    edges: list[tuple[int, int, float]]
    kind: str = "spanning"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = sorted(((u, v, float(w)) if u < v else (v, u, float(w)) for u, v, w in self.edges))
        if self.kind not in ("spanning", "dominating"):
            raise ValueError(f"unknown tree kind {self.kind!r}")

    @property
    def weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        for lst in adj:
            lst.sort()
        return adj

    def is_tree(self) -> bool:
        if len(self.edges) != max(self.n - 1, 0):
            return False
        return _count_components(self.n, [(u, v) for u, v, _ in self.edges]) == (1 if self.n else 0)

    def validate(self, g: WeightedGraph | None = None) -> None:
        if not self.is_tree():
            raise GraphError("edge set is not a spanning tree of the point set")
        if self.kind == "spanning" and g is not None:
            for u, v, w in self.edges:
                if not g.has_edge(u, v):
                    raise GraphError(f"tree edge ({u}, {v}) is not a graph edge")
                if not close(g.weight(u, v), w):
                    raise GraphError(f"tree edge ({u}, {v}) has weight {w}, graph has {g.weight(u, v)}")

    def rooted(self, root: int = 0) -> tuple[list[int], list[float], list[int]]:
        """Parent array, distance-from-root array and BFS order."""
        adj = self.adjacency()
        parent = [-1] * self.n
        dist = [math.inf] * self.n
        dist[root] = 0.0
        order = [root]
        seen = [False] * self.n
        seen[root] = True
        for x in order:
            for y, w in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    dist[y] = dist[x] + w
                    order.append(y)
        return parent, dist, order

    def distances_from(self, root: int) -> np.ndarray:
        return np.array(self.rooted(root)[1])

    def distance_matrix(self) -> np.ndarray:
        adj = self.adjacency()
        out = np.full((self.n, self.n), math.inf)
        for s in range(self.n):
            row = out[s]
            row[s] = 0.0
            stack = [s]
            while stack:
                x = stack.pop()
                for y, w in adj[x]:
                    if row[y] == math.inf:
                        row[y] = row[x] + w
                        stack.append(y)
        return out

    def path(self, u: int, v: int) -> list[int]:
        parent, _, _ = self.rooted(u)
        if v != u and parent[v] == -1:
            raise GraphError(f"{u} and {v} are not connected in the tree")
        out = [v]
        while out[-1] != u:
            out.append(parent[out[-1]])
        return out[::-1]

    def as_graph(self) -> WeightedGraph:
        return WeightedGraph(self.n, self.edges)


def _count_components(n: int, pairs: Iterable[tuple[int, int]]) -> int:
    uf = UnionFind(n)
    comps = n
    for u, v in pairs:
        if uf.union(u, v):
            comps -= 1
    return comps


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


# ---------------------------------------------------------------------------
# shortest paths


def dijkstra(adj, weights, sources, allowed=None, init=None):
    """Single- or multi-source Dijkstra with a deterministic tie-break.

    ``adj[x]`` lists ``(y, edge_id)``; ``weights[edge_id]`` must be >= 0.
    Among equally short routes the predecessor with the smallest id wins.
    ``init`` optionally gives a starting value per source (may be negative).
    ``allowed`` restricts the search to a vertex subset (any container).

    Returns ``(dist, pred, pred_edge)`` as dicts over reached vertices.
    """
    if isinstance(sources, int):
        sources = [sources]
    dist: dict[int, float] = {}
    pred: dict[int, int] = {}
    pred_edge: dict[int, int] = {}
    best: dict[int, float] = {}
    heap = []
    for i, s in enumerate(sources):
        val = 0.0 if init is None else float(init[i])
        if s not in best or val < best[s]:
            best[s] = val
            heap.append((val, s))
    heapq.heapify(heap)
    while heap:
        dx, x = heapq.heappop(heap)
        if x in dist or dx > best[x]:
            continue
        dist[x] = dx
        for y, eid in adj[x]:
            if y in dist or (allowed is not None and y not in allowed):
                continue
            nd = dx + weights[eid]
            cur = best.get(y)
            if cur is None or nd < cur:
                best[y] = nd
                pred[y] = x
                pred_edge[y] = eid
                heapq.heappush(heap, (nd, y))
            elif nd == cur and x < pred.get(y, math.inf):
                pred[y] = x
                pred_edge[y] = eid
    return dist, pred, pred_edge


def shortest_path_tree(g: WeightedGraph, source: int, weights=None):
    """Distances (array), predecessor array and predecessor-edge array from ``source``."""
    w = g.weights if weights is None else weights
    dist, pred, pedge = dijkstra(g.adj, w, source)
    d = np.full(g.n, math.inf)
    p = np.full(g.n, -1, dtype=int)
    pe = np.full(g.n, -1, dtype=int)
    for x, v in dist.items():
        d[x] = v
    for x, v in pred.items():
        p[x] = v
        pe[x] = pedge[x]
    return d, p, pe


def path_from_pred(pred, source: int, target: int) -> list[int]:
    out = [target]
    while out[-1] != source:
        nxt = pred[out[-1]]
        if nxt < 0:
            raise DisconnectedGraphError(source, target)
        out.append(int(nxt))
    return out[::-1]


def graph_shortest_path(g: WeightedGraph, u: int, v: int, weights=None) -> list[int]:
    _, pred, _ = shortest_path_tree(g, u, weights)
    return path_from_pred(pred, u, v)


def distance_matrix(g: WeightedGraph, weights=None, sources=None) -> np.ndarray:
    """All-pairs (or from ``sources``) shortest-path distances; inf when unreachable."""
    if g.n == 0:
        return np.zeros((0, 0))
    return shortest_path(g.csr(weights), method="D", directed=False, indices=sources)


def shortest_path_metric(g: WeightedGraph, weights=None) -> FiniteMetric:
    d = distance_matrix(g, weights)
    if not np.all(np.isfinite(d)):
        u, v = np.argwhere(~np.isfinite(d))[0]
        raise DisconnectedGraphError(int(u), int(v))
    np.fill_diagonal(d, 0.0)
    d = np.minimum(d, d.T)
    return FiniteMetric(d, check=False)


def induced_metric(m: FiniteMetric, s: TerminalSet | Sequence[int]) -> FiniteMetric:
    ids = list(s)
    if any(i < 0 or i >= m.n for i in ids):
        raise IndexError(f"point id out of range for n={m.n}")
    return FiniteMetric(m.d[np.ix_(ids, ids)], check=False)


def nearest_in_set(m: FiniteMetric, subset: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """For every point: the nearest member of ``subset`` (smallest id on ties) and its distance."""
    ids = np.array(sorted(subset))
    sub = m.d[:, ids]
    # argmin returns the first minimum, i.e. the smallest id since ids is sorted
    j = sub.argmin(axis=1)
    return ids[j], sub[np.arange(m.n), j]


# ---------------------------------------------------------------------------
# MST and lightness


def mst(g: WeightedGraph, weights=None) -> TreeSample:
    """Kruskal; ties broken by edge id."""
    g.require_connected()
    w = g.weights if weights is None else weights
    order = sorted(range(g.m), key=lambda i: (w[i], i))
    uf = UnionFind(g.n)
    chosen = []
    for i in order:
        u, v, wt = g.edges[i]
        if uf.union(u, v):
            chosen.append((u, v, float(w[i])))
            if len(chosen) == g.n - 1:
                break
    return TreeSample(g.n, chosen, "spanning")


def lightness(t: TreeSample, g: WeightedGraph) -> float:
    base = mst(g).weight
    if base == 0:
        return 1.0
    return t.weight / base


# ---------------------------------------------------------------------------
# distortion


@dataclass(frozen=True)
class DistortionReport:
    max_expansion: float
    max_contraction: float
    distortion: float
    pair_set_tag: str
    pairs: int = 0

    def as_dict(self) -> dict:
        return {"max_expansion": self.max_expansion, "max_contraction": self.max_contraction,
                "distortion": self.distortion, "pair_set": self.pair_set_tag, "pairs": self.pairs}


def as_distance_matrix(obj) -> np.ndarray:
    if isinstance(obj, np.ndarray):
        return obj
    if isinstance(obj, WeightedGraph):
        return distance_matrix(obj)
    if hasattr(obj, "distance_matrix"):
        return obj.distance_matrix()
    raise TypeError(f"cannot derive distances from {type(obj).__name__}")


def pair_mask(n: int, pairs="all", terms=None) -> tuple[np.ndarray, str]:
    """Boolean upper-triangular mask of the requested pairs."""
    mask = np.zeros((n, n), dtype=bool)
    if isinstance(pairs, str):
        if pairs == "all":
            tag = "all-pairs"
            mask[np.triu_indices(n, 1)] = True
        elif pairs == "terminal":
            if terms is None:
                raise ValueError("terminal pair set needs terminals")
            tag = "terminal-pairs"
            tm = np.zeros(n, dtype=bool)
            tm[list(terms)] = True
            mask[tm, :] = True
            mask[:, tm] = True
            mask = np.triu(mask, 1)
        else:
            raise ValueError(f"unknown pair set {pairs!r}")
    else:
        tag = "explicit"
        for u, v in pairs:
            if u != v:
                mask[min(u, v), max(u, v)] = True
    return mask, tag


def eval_distortion(src, dst, pairs="all", terms=None) -> DistortionReport:
    """Worst expansion, worst contraction and their product over a pair set.

    The product is the best distortion achievable by rescaling the target.
    """
    ds = as_distance_matrix(src)
    dt = as_distance_matrix(dst)
    if ds.shape != dt.shape:
        raise ValueError(f"point sets differ: {ds.shape} vs {dt.shape}")
    mask, tag = pair_mask(ds.shape[0], pairs, terms)
    a, b = ds[mask], dt[mask]
    both_zero = (a == 0) & (b == 0)
    bad = (a == 0) & (b != 0)
    if np.any(bad):
        idx = np.argwhere(mask)[np.flatnonzero(bad)[0]]
        raise ValueError(f"pair {tuple(int(i) for i in idx)} has zero source distance but nonzero image")
    a, b = a[~both_zero], b[~both_zero]
    if a.size == 0:
        return DistortionReport(1.0, 1.0, 1.0, tag, 0)
    with np.errstate(divide="ignore"):
        expansion = float((b / a).max())
        contraction = float((a / b).max())
    return DistortionReport(expansion, contraction, expansion * contraction, tag, int(a.size))


def stretch(src, dst, pairs="all", terms=None) -> float:
    """Max of d_dst / d_src without rescaling (for non-contractive targets)."""
    return eval_distortion(src, dst, pairs, terms).max_expansion


def dominates(dst, src, tol: float = REL_TOL) -> bool:
    a = as_distance_matrix(src)
    b = as_distance_matrix(dst)
    return bool(np.all(b >= a - tol * np.maximum(1.0, a)))


# ---------------------------------------------------------------------------
# graph text format


def parse_graph(text: str) -> tuple[WeightedGraph, TerminalSet | None]:
    """Parse ``n m k`` / terminals / ``u v w [c]`` lines; ``#`` starts a comment."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise GraphError("empty graph file")
    try:
        n, m, k = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise GraphError(f"bad header line {lines[0]!r}") from exc
    pos = 1
    terms = None
    if k > 0:
        if pos >= len(lines):
            raise GraphError("missing terminal line")
        ids = [int(x) for x in lines[pos].split()]
        if len(ids) != k:
            raise GraphError(f"expected {k} terminals, got {len(ids)}")
        terms = TerminalSet(ids)
        pos += 1
    body = lines[pos:]
    if len(body) != m:
        raise GraphError(f"expected {m} edge lines, got {len(body)}")
    edges = []
    for line in body:
        parts = line.split()
        if len(parts) not in (3, 4):
            raise GraphError(f"bad edge line {line!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2]),
                      float(parts[3]) if len(parts) == 4 else None))
    return WeightedGraph(n, edges), terms


def format_graph(g: WeightedGraph, terms: TerminalSet | None = None, comments: Sequence[str] = ()) -> str:
    out = [f"# {c}" for c in comments]
    k = len(terms) if terms is not None else 0
    out.append(f"{g.n} {g.m} {k}")
    if k:
        out.append(" ".join(str(t) for t in terms))
    for i, (u, v, w) in enumerate(g.edges):
        if g.capacities is not None:
            out.append(f"{u} {v} {w!r} {g.capacities[i]!r}")
        else:
            out.append(f"{u} {v} {w!r}")
    return "\n".join(out) + "\n"


def read_graph(path) -> tuple[WeightedGraph, TerminalSet | None]:
    with open(path) as fh:
        return parse_graph(fh.read())


def write_graph(path, g: WeightedGraph, terms=None, comments=()) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g, terms, comments))
