"""Random ultrametrics with terminals first in the carving order.

Hierarchical ball carving: a random permutation with the terminals as
prefix, a log-uniform radius factor beta in [1, 2], and at level i every
point joins the first center (in permutation order) within beta * 2**(i-2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FiniteMetric, TerminalSet, TreeSample


@dataclass
class UltrametricTree:
    """Rooted labeled tree whose leaves are points ``0..n-1``.

    Nodes ``0..n-1`` are the leaves (label 0); internal nodes follow.
    ``parent[root] == -1``. Labels never increase from root to leaf.
    """

    n: int
    parent: list[int]
    label: list[float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._children = None
        self._depth = None

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return self.parent.index(-1)

    @property
    def children(self) -> list[list[int]]:
        if self._children is None:
            ch: list[list[int]] = [[] for _ in range(self.size)]
            for x, p in enumerate(self.parent):
                if p >= 0:
                    ch[p].append(x)
            self._children = ch
        return self._children

    def depth(self, x: int) -> int:
        if self._depth is None:
            dep = [0] * self.size
            for v in self.topological():
                p = self.parent[v]
                dep[v] = 0 if p < 0 else dep[p] + 1
            self._depth = dep
        return self._depth[x]

    def topological(self) -> list[int]:
        """Nodes with every parent before its children."""
        order = [self.root]
        for x in order:
            order.extend(self.children[x])
        return order

    def lca(self, x: int, y: int) -> int:
        if not (0 <= x < self.n and 0 <= y < self.n):
            raise KeyError(f"unknown leaf id in ({x}, {y})")
        while self.depth(x) > self.depth(y):
            x = self.parent[x]
        while self.depth(y) > self.depth(x):
            y = self.parent[y]
        while x != y:
            x, y = self.parent[x], self.parent[y]
        return x

    def leaves_under(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for x in reversed(self.topological()):
            if x < self.n:
                out[x] = [x]
            else:
                out[x] = sorted(i for c in self.children[x] for i in out[c])
        return out

    def distance_matrix(self) -> np.ndarray:
        d = np.zeros((self.n, self.n))
        leaves = self.leaves_under()
        for z in range(self.n, self.size):
            ch = self.children[z]
            for a in range(len(ch)):
                la = leaves[ch[a]]
                for b in range(a + 1, len(ch)):
                    lb = leaves[ch[b]]
                    d[np.ix_(la, lb)] = self.label[z]
                    d[np.ix_(lb, la)] = self.label[z]
        return d

    def validate(self) -> None:
        for x in range(self.size):
            p = self.parent[x]
            if x < self.n and self.label[x] != 0:
                raise ValueError(f"leaf {x} has nonzero label")
            if x >= self.n and not self.children[x]:
                raise ValueError(f"internal node {x} has no children")
            if p >= 0 and self.label[x] > self.label[p]:
                raise ValueError(f"label increases from {p} to {x}")
        if len(self.topological()) != self.size:
            raise ValueError("not a single rooted tree")


def ultrametric_distance(t: UltrametricTree, x: int, y: int) -> float:
    if x == y:
        if not 0 <= x < t.n:
            raise KeyError(f"unknown leaf id {x}")
        return 0.0
    return float(t.label[t.lca(x, y)])


def _zero_groups(d: np.ndarray) -> np.ndarray:
    """Representative (smallest id) of each point's zero-distance class."""
    n = d.shape[0]
    rep = np.arange(n)
    for x in range(n):
        if rep[x] == x:
            same = np.flatnonzero(d[x] == 0)
            rep[same[same > x]] = x
    return rep


def sample_frt(m: FiniteMetric, terms: TerminalSet, rng=None) -> UltrametricTree:
    """One draw of the terminal-first hierarchical ball carving."""
    rng = np.random.default_rng(rng)
    n = m.n
    ids = list(terms)
    kset = set(ids)
    perm = np.concatenate([rng.permutation(ids), rng.permutation([x for x in range(n) if x not in kset])])
    perm = perm.astype(int)
    beta = float(2.0 ** rng.random())
    if n == 1:
        return UltrametricTree(1, [-1], [0.0], {"perm": perm.tolist(), "beta": beta, "scale": 1.0,
                                                "delta": 0, "levels": [], "k": len(ids)})
    rep = _zero_groups(m.d)
    pts = np.flatnonzero(rep == np.arange(n))
    d_full = m.d
    pos_nz = d_full[d_full > 0]
    scale = float(pos_nz.min()) if pos_nz.size else 1.0
    diam = float(d_full.max()) / scale
    delta = math.ceil(math.log2(diam)) if diam > 1 else 0
    # centers may be any point of X, scanned in permutation order
    centers_in_order = perm
    dperm = d_full[np.ix_(pts, centers_in_order)] / scale

    levels = []  # (i, cluster id per representative, center per representative)
    cluster = np.zeros(len(pts), dtype=int)
    i = delta - 1
    while np.bincount(cluster).max() > 1:
        beta_i = beta * 2.0 ** (i - 2)
        within = dperm <= beta_i
        first = within.argmax(axis=1)  # each point is within 0 of itself, so a hit always exists
        center = centers_in_order[first]
        key = cluster.astype(np.int64) * n + center
        _, new = np.unique(key, return_inverse=True)
        levels.append((i, new.copy(), center.copy()))
        cluster = new
        i -= 1

    # assemble: level clusters become internal nodes labeled 2**level (scaled back)
    parent: list[int] = [-1] * n
    label: list[float] = [0.0] * n
    root = n
    parent.append(-1)
    label.append(2.0 ** delta * scale)
    prev_nodes = np.full(len(pts), root)
    for lev, cl, _ in levels:
        node_of = {}
        new_nodes = np.empty(len(pts), dtype=int)
        for j, c in enumerate(cl):
            c = int(c)
            if c not in node_of:
                node_of[c] = len(parent)
                parent.append(int(prev_nodes[j]))
                label.append(2.0 ** lev * scale)
            new_nodes[j] = node_of[c]
        prev_nodes = new_nodes
    for j, p in enumerate(pts):
        parent[p] = int(prev_nodes[j])
    for x in range(n):
        if rep[x] != x:
            parent[x] = parent[rep[x]]
    t = _compress(n, parent, label)
    t.meta.update({"perm": perm.tolist(), "beta": beta, "scale": scale, "delta": delta, "k": len(ids),
                   "levels": [(lev, cl.tolist(), c.tolist()) for lev, cl, c in levels],
                   "points": pts.tolist()})
    return t


def _compress(n: int, parent: list[int], label: list[float]) -> UltrametricTree:
    """Splice out internal nodes with one child (the lower label survives) and childless nodes."""
    size = len(parent)
    children: list[list[int]] = [[] for _ in range(size)]
    for x, p in enumerate(parent):
        if p >= 0:
            children[p].append(x)
    root = next(x for x in range(n, size) if parent[x] == -1) if size > n else 0

    new_parent: dict[int, int] = {}
    new_label: dict[int, float] = {}

    def descend(x):
        # follow single-child chains down to the node that actually branches (or a leaf)
        while x >= n and len(children[x]) == 1:
            x = children[x][0]
        return x

    top = descend(root)
    new_parent[top] = -1
    stack = [top]
    while stack:
        x = stack.pop()
        new_label[x] = label[x] if x >= n else 0.0
        if x < n:
            continue
        for c in children[x]:
            c2 = descend(c)
            new_parent[c2] = x
            stack.append(c2)
    internal = sorted(x for x in new_parent if x >= n)
    remap = {x: x for x in range(n)}
    for j, x in enumerate(internal):
        remap[x] = n + j
    par = [-1] * (n + len(internal))
    lab = [0.0] * (n + len(internal))
    for x, p in new_parent.items():
        par[remap[x]] = -1 if p < 0 else remap[p]
        lab[remap[x]] = new_label[x]
    return UltrametricTree(n, par, lab)


@dataclass
class FrtCheck:
    dominates: bool
    laminar: bool
    diameters_ok: bool
    terminal_settling: bool

    @property
    def ok(self) -> bool:
        return self.dominates and self.laminar and self.diameters_ok and self.terminal_settling


def check_frt_sample(t: UltrametricTree, m: FiniteMetric, terms: TerminalSet) -> FrtCheck:
    """Domination, laminarity, per-level diameter and terminal-settling checks.

    Terminal settling: at every level each terminal is captured by a center
    that is itself a terminal, so no non-terminal ever settles a pair with a
    terminal endpoint.
    """
    meta = t.meta
    n = m.n
    dt = t.distance_matrix()
    dom = bool(np.all(dt >= m.d * (1 - 1e-9)))
    if n == 1:
        return FrtCheck(dom, True, True, True)
    pts = np.array(meta["points"])
    scale = meta["scale"]
    k = meta["k"]
    rank = np.empty(n, dtype=int)
    rank[np.array(meta["perm"])] = np.arange(n)
    d = m.d[np.ix_(pts, pts)] / scale
    term_rows = np.isin(pts, list(terms))
    laminar = diam_ok = settle = True
    prev = np.zeros(len(pts), dtype=int)
    for lev, cl, centers in meta["levels"]:
        cl = np.array(cl)
        centers = np.array(centers)
        # each new cluster sits inside exactly one cluster of the level above
        for c in np.unique(cl):
            if len(np.unique(prev[cl == c])) != 1:
                laminar = False
            members = np.flatnonzero(cl == c)
            if d[np.ix_(members, members)].max() > 2.0 ** lev * (1 + 1e-9):
                diam_ok = False
        if np.any(rank[centers[term_rows]] >= k):
            settle = False
        prev = cl
    return FrtCheck(dom, laminar, diam_ok, settle)


def harmonic(n: int) -> float:
    return float(sum(1.0 / s for s in range(1, n + 1)))


@dataclass
class ClassStats:
    mean: float  # average ratio over pairs and samples
    stderr: float  # standard error of the per-sample average
    max_pair_mean: float  # worst per-pair expected ratio
    max_ratio: float  # worst single-sample ratio
    envelope: float
    pairs: int

    @property
    def ok(self) -> bool:
        return self.max_pair_mean <= self.envelope

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "max_pair_mean": self.max_pair_mean,
                "max": self.max_ratio, "envelope": self.envelope, "pairs": self.pairs, "pass": self.ok}


@dataclass
class FrtReport:
    terminal: ClassStats
    all_pairs: ClassStats
    samples: int
    all_checks_ok: bool
    failed_checks: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"samples": self.samples, "terminal_pairs": self.terminal.as_dict(),
                "all_pairs": self.all_pairs.as_dict(), "checks_ok": self.all_checks_ok,
                "failed_checks": self.failed_checks}


def frt_envelopes(n: int, k: int) -> tuple[float, float]:
    """(16 (ln k + 1), 16 (ln k + ln(n-k) + 2)): upper bounds on the harmonic sums."""
    term = 16 * (math.log(k) + 1)
    allp = 16 * (math.log(k) + (math.log(n - k) if n > k else 0.0) + 2)
    return term, allp


def _class_stats(ratios: np.ndarray, mask: np.ndarray, envelope: float) -> ClassStats:
    vals = ratios[:, mask]  # samples x pairs
    if vals.size == 0:
        return ClassStats(1.0, 0.0, 1.0, 1.0, envelope, 0)
    per_sample = vals.mean(axis=1)
    s = len(per_sample)
    stderr = float(per_sample.std(ddof=1) / math.sqrt(s)) if s > 1 else 0.0
    return ClassStats(float(per_sample.mean()), stderr, float(vals.mean(axis=0).max()),
                      float(vals.max()), envelope, int(mask.sum()))


def estimate_expected_distortion(m: FiniteMetric, terms: TerminalSet, samples: int = 200, rng=None,
                                 sampler=None) -> FrtReport:
    """Monte-Carlo expected stretch for terminal pairs and for all pairs.

    Every sample is also checked for domination, laminarity, cluster
    diameters and terminal settling.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    n = m.n
    iu, ju = np.triu_indices(n, 1)
    base = m.d[iu, ju]
    keep = base > 0
    iu, ju, base = iu[keep], ju[keep], base[keep]
    tmask = terms.mask(n)
    term_pair = tmask[iu] | tmask[ju]
    ratios = np.empty((samples, len(base)))
    failed = []
    for s in range(samples):
        t = (sampler or sample_frt)(m, terms, rng)
        chk = check_frt_sample(t, m, terms)
        if not chk.ok:
            failed.append({"sample": s, **chk.__dict__})
        ratios[s] = t.distance_matrix()[iu, ju] / base
    env_t, env_a = frt_envelopes(n, len(terms))
    return FrtReport(_class_stats(ratios, term_pair, env_t),
                     _class_stats(ratios, np.ones(len(base), dtype=bool), env_a),
                     samples, not failed, failed)


def remove_steiner(t: UltrametricTree) -> TreeSample:
    """Tree on the points alone: each internal node merges into its smallest descendant leaf.

    The edge from a child to its parent carries the parent's label. For
    2-HST labels this gives d_t <= d_out <= 4 d_t, so the output dominates
    whatever the ultrametric dominated.
    """
    leaves = t.leaves_under()
    rep = [leaves[x][0] for x in range(t.size)]
    edges = []
    for x in range(t.size):
        p = t.parent[x]
        if p >= 0 and rep[x] != rep[p]:
            edges.append((rep[x], rep[p], t.label[p]))
    return TreeSample(t.n, edges, "dominating", {"source": "ultrametric", "factor": 4.0})


def format_ultrametric(t: UltrametricTree) -> str:
    lines = []
    stack = [(t.root, 0)]
    while stack:
        x, depth = stack.pop()
        pad = "  " * depth
        if x < t.n:
            lines.append(f"{pad}point={x}")
        else:
            lines.append(f"{pad}label={t.label[x]!r}")
            for c in reversed(t.children[x]):
                stack.append((c, depth + 1))
    return "\n".join(lines) + "\n"


def parse_ultrametric(text: str) -> UltrametricTree:
    entries = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        depth = (len(raw) - len(raw.lstrip(" "))) // 2
        key, val = raw.strip().split("=", 1)
        entries.append((depth, key, val))
    n = sum(1 for _, key, _ in entries if key == "point")
    parent = [-1] * n
    label = [0.0] * n
    stack: list[int] = []  # node ids along the current root path
    for depth, key, val in entries:
        del stack[depth:]
        p = stack[-1] if stack else -1
        if key == "point":
            x = int(val)
            parent[x] = p
            stack.append(x)
        else:
            x = len(parent)
            parent.append(p)
            label.append(float(val))
            stack.append(x)
    t = UltrametricTree(n, parent, label)
    t.validate()
    return t
