"""Experiment driver: instances x algorithms x seeds -> result rows (CSV/JSON) and optional plots."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .core import TerminalSet, WeightedGraph, distance_matrix, lightness, shortest_path_metric
from .generators import gen_alternating_cycle, gen_lightness_gadget, gen_random, lightness_gadget

ALGORITHMS = ("light-tree", "spanner", "frt", "petal", "embed", "congestion", "bisect")

COLUMNS = ["instance", "algorithm", "params", "alpha_hat", "beta_hat", "lightness", "edges", "runtime",
           "seed", "version"]


@dataclass
class ExperimentConfig:
    algorithm: str
    instance: dict  # {"family": ..., plus generator params}
    seeds: list = field(default_factory=lambda: [0])
    samples: int = 20
    sweep: dict = field(default_factory=dict)  # parameter name -> list of values, e.g. {"alpha": [1.5, 2]}
    csv_path: str | None = None
    json_path: str | None = None
    plot_path: str | None = None
    record_runtime: bool = False  # off keeps reruns byte-identical
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        for name, vals in self.sweep.items():
            if not vals:
                raise ValueError(f"sweep {name!r} is empty")


@dataclass
class ResultRow:
    instance: str
    algorithm: str
    params: str  # canonical JSON
    alpha_hat: float  # terminal-class measurement
    beta_hat: float  # all-pairs measurement
    lightness: float | None
    edges: int | None
    runtime: float | None
    seed: int
    version: str = __version__

    def as_list(self) -> list:
        return [_fmt(getattr(self, c)) for c in COLUMNS]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return x


def instance_label(spec: dict) -> str:
    return ",".join(f"{k}={spec[k]}" for k in sorted(spec))


def make_instance(spec: dict, seed: int) -> tuple[WeightedGraph, TerminalSet]:
    spec = dict(spec)
    fam = spec.pop("family")
    if fam == "alternating-cycle":
        return gen_alternating_cycle(int(spec["k"]), int(spec.get("extra", 0)))
    if fam == "lightness-gadget":
        if "w" in spec:
            return lightness_gadget(int(spec["k"]), int(spec["n"]), float(spec["w"]))
        return gen_lightness_gadget(int(spec["k"]), int(spec["n"]), float(spec["eps"]))
    return gen_random(fam, spec, np.random.default_rng([seed, 1]))


def _stretches(dg: np.ndarray, dt: np.ndarray, terms) -> tuple[float, float]:
    iu, ju = np.triu_indices(len(dg), 1)
    ok = dg[iu, ju] > 0
    r = dt[iu, ju][ok] / dg[iu, ju][ok]
    tm = terms.mask(len(dg))
    tp = (tm[iu] | tm[ju])[ok]
    return (float(r[tp].max()) if tp.any() else 1.0), (float(r.max()) if r.size else 1.0)


def run_one(cfg: ExperimentConfig, seed: int, params: dict) -> ResultRow:
    from . import congestion, frt, light_trees, lp, petal, spanners
    from .core import eval_distortion

    g, terms = make_instance(cfg.instance, seed)
    rng = np.random.default_rng([seed, 2])
    start = time.perf_counter()
    light = edges = None
    alg = cfg.algorithm
    if alg == "light-tree":
        t = light_trees.light_terminal_tree(g, terms, float(params.get("alpha", 2.0)))
        a, b = _stretches(distance_matrix(g), t.distance_matrix(), terms)
        light, edges = lightness(t, g), len(t.edges)
    elif alg == "spanner":
        sp = spanners.terminal_graph_spanner(g, terms, float(params.get("t", 1.0)))
        a, b = _stretches(distance_matrix(g), sp.distance_matrix(), terms)
        edges = sp.size
    elif alg == "frt":
        rep = frt.estimate_expected_distortion(shortest_path_metric(g), terms, cfg.samples, rng)
        a, b = rep.terminal.mean, rep.all_pairs.mean
    elif alg == "petal":
        rep = petal.estimate_spanning_distortion(g, terms, cfg.samples, rng)
        a, b = rep.terminal_mean, rep.all_mean
        edges = g.n - 1
    elif alg == "embed":
        m = shortest_path_metric(g)
        emb = lp.strong_terminal_lp(m, terms, float(params.get("p", 2.0)), rng)
        a = eval_distortion(m, emb, "terminal", terms).distortion
        b = eval_distortion(m, emb, "all").distortion
        edges = emb.dim
    elif alg == "congestion":
        g = g if g.capacities is not None else g.with_capacities(np.ones(g.m))
        res = congestion.mwu_congestion_distribution(g, terms, cfg.samples, rng)
        a, b = res.alpha_hat, res.beta_hat
        edges = len(res.distribution.trees)
    else:  # bisect
        g = g if g.capacities is not None else g.with_capacities(np.ones(g.m))
        if not congestion.is_vertex_cover(g, terms):
            from .generators import vertex_cover_terminals
            terms = vertex_cover_terminals(g, np.random.default_rng([seed, 3]))
        res = congestion.min_bisection_approx(g, terms, cfg.samples, rng)
        a = res.value
        b = res.ratio if res.ratio is not None else math.nan
    runtime = time.perf_counter() - start if cfg.record_runtime else None
    return ResultRow(instance_label(cfg.instance), alg, json.dumps(params, sort_keys=True), float(a), float(b),
                     light, edges, runtime, int(seed))


def _grid(sweep: dict) -> list[dict]:
    out = [{}]
    for name in sorted(sweep):
        out = [{**p, name: v} for p in out for v in sweep[name]]
    return out


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Run every (seed, parameter) combination; rows sorted by (instance, algorithm, params, seed)."""
    jobs = [(s, p) for s in cfg.seeds for p in _grid(cfg.sweep)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(lambda j: run_one(cfg, *j), jobs))
    else:
        rows = [run_one(cfg, s, p) for s, p in jobs]
    rows.sort(key=lambda r: (r.instance, r.algorithm, r.params, r.seed))
    if cfg.csv_path:
        _write(cfg.csv_path, rows_to_csv(rows))
    if cfg.json_path:
        _write(cfg.json_path, rows_to_json(rows))
    if cfg.plot_path:
        plot_rows(rows, cfg.plot_path)
    return rows


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def rows_to_json(rows: list[ResultRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1, sort_keys=True) + "\n"


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_rows(rows: list[ResultRow], path: str) -> str:
    """Measured terminal and all-pairs values against the swept parameter (first key of params)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[str, list[tuple[float, float, float]]] = {}
    xname = "param"
    for r in rows:
        params = json.loads(r.params)
        if params:
            xname = sorted(params)[0]
            x = float(params[xname])
        else:
            x = float(r.seed)
            xname = "seed"
        groups.setdefault(r.algorithm, []).append((x, r.alpha_hat, r.beta_hat))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for alg, pts in sorted(groups.items()):
        pts.sort()
        xs = sorted({p[0] for p in pts})
        at = [np.mean([p[1] for p in pts if p[0] == x]) for x in xs]
        bt = [np.mean([p[2] for p in pts if p[0] == x]) for x in xs]
        ax.plot(xs, at, "o-", label=f"{alg} terminal")
        ax.plot(xs, bt, "s--", label=f"{alg} all pairs")
    ax.set_xlabel(xname)
    ax.set_ylabel("measured distortion")
    ax.legend(fontsize=7)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, metadata={"Date": None} if path.endswith(".svg") else None)
    plt.close(fig)
    return path


def stretch_curves(ks, n: int = 64, samples: int = 20, seed: int = 0, family: str = "gnp",
                   algorithm: str = "petal") -> list[dict]:
    """Mean terminal-pair and all-pairs stretch for each terminal count (trend report only)."""
    from . import frt, petal

    out = []
    for k in ks:
        g, terms = gen_random(family, {"n": n, "p": min(1.0, 4 / n), "k": k}, np.random.default_rng([seed, k]))
        rng = np.random.default_rng([seed, k, 1])
        if algorithm == "petal":
            rep = petal.estimate_spanning_distortion(g, terms, samples, rng)
            out.append({"k": k, "n": n, "terminal_mean": rep.terminal_mean, "all_mean": rep.all_mean})
        else:
            rep = frt.estimate_expected_distortion(shortest_path_metric(g), terms, samples, rng)
            out.append({"k": k, "n": n, "terminal_mean": rep.terminal.mean, "all_mean": rep.all_pairs.mean})
    return out


__all__ = ["ExperimentConfig", "ResultRow", "run_experiment", "run_one", "rows_to_csv", "rows_to_json",
           "plot_rows", "make_instance", "stretch_curves"]
