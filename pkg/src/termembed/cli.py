"""Command-line front end.

Exit codes: 0 every check passed, 2 a checked bound failed, 1 usage or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__

EXIT_OK, EXIT_IO, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which we reserve for failed checks
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_IO)


def _common(p: argparse.ArgumentParser, samples: int = 1) -> None:
    p.add_argument("--input", "-i", help="graph file (n m k header, terminal line, u v w [c] edges)")
    p.add_argument("--output", "-o", help="output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=samples, help="sample / round count where applicable")
    p.add_argument("--format", choices=("csv", "json"), default="json", help="report format on stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="termembed", description="Terminal-aware embeddings, spanners and tree distributions.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a generated instance")
    _common(p)
    p.add_argument("--family", required=True,
                   choices=("gnp", "grid", "tree+chords", "alternating-cycle", "lightness-gadget"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--chords", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--extra", type=int, default=0)
    p.add_argument("--weights", choices=("unit", "int", "uniform"), default="uniform")
    p.add_argument("--capacities", choices=("unit", "int", "uniform"))

    p = sub.add_parser("embed", help="strong terminal l_p embedding of the shortest-path metric")
    _common(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--c1", type=float, default=2.0)

    p = sub.add_parser("spanner", help="terminal subgraph spanner")
    _common(p)
    p.add_argument("--t", type=float, default=1.0)

    p = sub.add_parser("light-tree", help="light spanning tree with terminal distortion bound")
    _common(p)
    p.add_argument("--alpha", type=float, default=2.0)

    p = sub.add_parser("frt", help="terminal-first random ultrametrics (Monte-Carlo report)")
    _common(p, samples=200)

    p = sub.add_parser("congestion", help="MWU tree distribution with terminal congestion bounds")
    _common(p, samples=32)

    p = sub.add_parser("petal", help="petal-decomposition spanning trees (Monte-Carlo report)")
    _common(p, samples=20)

    p = sub.add_parser("bisect", help="min bisection via tree distributions")
    _common(p, samples=32)

    p = sub.add_parser("verify", help="check a tree file against a graph")
    _common(p)
    p.add_argument("--tree", required=True, help="tree in the graph file format")
    p.add_argument("--max-distortion", type=float, help="fail when terminal distortion exceeds this")
    p.add_argument("--max-lightness", type=float, help="fail when lightness exceeds this")

    p = sub.add_parser("bench", help="experiment sweep to CSV/JSON")
    _common(p, samples=20)
    p.add_argument("--algorithm", required=True,
                   choices=("light-tree", "spanner", "frt", "petal", "embed", "congestion", "bisect"))
    p.add_argument("--instance", default="family=gnp,n=32,p=0.2,k=4",
                   help="comma list of key=value generator params")
    p.add_argument("--seeds", default=None, help="comma list (default: --seed)")
    p.add_argument("--sweep", action="append", default=[], help="name=v1,v2,... (repeatable)")
    p.add_argument("--plot", help="optional plot file (png/svg)")
    p.add_argument("--record-runtime", action="store_true")
    return ap


def _num(s: str):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def _load(args):
    from .core import read_graph

    if not args.input:
        raise UsageError("--input is required")
    try:
        g, terms = read_graph(args.input)
    except OSError as exc:
        raise OSError(f"cannot read {args.input}: {exc.strerror}") from exc
    if terms is None:
        raise UsageError(f"{args.input} declares no terminals")
    return g, terms


def _emit(report: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout  # looked up late so redirected streams are honoured
    if fmt == "json":
        out.write(json.dumps(report, indent=1, sort_keys=True, default=_jsonable) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["key", "value"])
    for k in sorted(report):
        w.writerow([k, json.dumps(report[k], default=_jsonable) if isinstance(report[k], (dict, list))
                    else report[k]])


def _jsonable(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "as_dict"):
        return o.as_dict()
    raise TypeError(type(o).__name__)


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def cmd_gen(args) -> tuple[dict, bool]:
    from .core import format_graph
    from .harness import make_instance

    spec = {"family": args.family}
    for key in ("n", "k", "p", "rows", "cols", "chords", "eps", "w", "extra", "weights", "capacities"):
        val = getattr(args, key)
        if val is not None:
            spec[key] = val
    try:
        g, terms = make_instance(spec, args.seed)
    except KeyError as exc:
        raise UsageError(f"family {args.family} needs --{exc.args[0]}") from exc
    text = format_graph(g, terms, [f"seed: {args.seed}", f"instance: {json.dumps(spec, sort_keys=True)}"])
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return {"n": g.n, "m": g.m, "k": len(terms), "connected": g.is_connected()}, g.is_connected()


def cmd_embed(args):
    from .core import eval_distortion, shortest_path_metric
    from .lp import strong_terminal_lp, write_embedding

    g, terms = _load(args)
    m = shortest_path_metric(g)
    emb = strong_terminal_lp(m, terms, args.p, np.random.default_rng(args.seed), args.c1)
    term = eval_distortion(m, emb, "terminal", terms)
    allp = eval_distortion(m, emb, "all")
    if args.output:
        write_embedding(args.output, emb, args.seed, {"p": args.p, "c1": args.c1})
    ok = term.max_expansion <= 1 + 1e-9
    return {"terminal_distortion": term.distortion, "all_pairs_distortion": allp.distortion, "dim": emb.dim,
            "non_expansive": ok}, ok


def cmd_spanner(args):
    from .core import distance_matrix
    from .spanners import terminal_graph_spanner, terminal_stretch

    g, terms = _load(args)
    sp = terminal_graph_spanner(g, terms, args.t)
    s = terminal_stretch(distance_matrix(g), sp.distance_matrix(), terms)
    if args.output:
        _write_text(args.output, sp.to_text(terms))
    ok = s <= sp.meta["stretch_bound"] * (1 + 1e-9)
    return {"edges": sp.size, "terminal_stretch": s, "bound": sp.meta["stretch_bound"],
            "size_target": sp.meta["size_target"], "pass": ok}, ok


def cmd_light_tree(args):
    from .core import eval_distortion, format_graph, lightness
    from .light_trees import light_terminal_tree

    g, terms = _load(args)
    t = light_terminal_tree(g, terms, args.alpha)
    dist = eval_distortion(g, t, "terminal", terms).distortion
    light = lightness(t, g)
    ok = dist <= t.meta["distortion_bound"] * (1 + 1e-9) and light <= t.meta["lightness_bound"] * (1 + 1e-9)
    if args.output:
        _write_text(args.output, format_graph(t.as_graph(), terms, [f"alpha: {args.alpha}"]))
    return {"terminal_distortion": dist, "distortion_bound": t.meta["distortion_bound"], "lightness": light,
            "lightness_bound": t.meta["lightness_bound"], "pass": ok}, ok


def cmd_frt(args):
    from .core import shortest_path_metric
    from .frt import estimate_expected_distortion, format_ultrametric, sample_frt

    g, terms = _load(args)
    m = shortest_path_metric(g)
    rep = estimate_expected_distortion(m, terms, args.samples, np.random.default_rng(args.seed))
    if args.output:
        _write_text(args.output, format_ultrametric(sample_frt(m, terms, np.random.default_rng(args.seed))))
    ok = rep.all_checks_ok and rep.terminal.ok and rep.all_pairs.ok
    return rep.as_dict(), ok


def cmd_congestion(args):
    from .congestion import mwu_congestion_distribution

    g, terms = _load(args)
    if g.capacities is None:
        g = g.with_capacities(np.ones(g.m))
    res = mwu_congestion_distribution(g, terms, args.samples, np.random.default_rng(args.seed))
    if args.output:
        res.distribution.save(args.output)
    ok = res.alpha_hat <= res.alpha_target and res.beta_hat <= res.beta_target
    return {"alpha_hat": res.alpha_hat, "beta_hat": res.beta_hat, "alpha_target": res.alpha_target,
            "beta_target": res.beta_target, "trees": len(res.distribution.trees), "pass": ok}, ok


def cmd_petal(args):
    from .petal import estimate_spanning_distortion, hierarchical_petal_tree, hierarchy_json

    g, terms = _load(args)
    rep = estimate_spanning_distortion(g, terms, args.samples, np.random.default_rng(args.seed))
    if args.output:
        tree = hierarchical_petal_tree(g, terms, np.random.default_rng(args.seed))
        _write_text(args.output, hierarchy_json(tree) + "\n")
    ok = rep.checks.ok and rep.radius_ok
    return rep.as_dict(), ok


def cmd_bisect(args):
    from .congestion import min_bisection_approx

    g, terms = _load(args)
    if g.capacities is None:
        g = g.with_capacities(np.ones(g.m))
    res = min_bisection_approx(g, terms, args.samples, np.random.default_rng(args.seed))
    out = {"side": res.side, "value": res.value, "optimum": res.optimum, "ratio": res.ratio, "trees": res.trees}
    ok = True
    if res.ratio is not None:
        bound = 4 * math.log(len(terms) + 1)
        out["ratio_envelope"] = bound
        ok = res.ratio <= bound
    if args.output:
        _write_text(args.output, " ".join(map(str, res.side)) + "\n")
    return out, ok


def cmd_verify(args):
    from .core import TreeSample, eval_distortion, lightness, read_graph

    g, terms = _load(args)
    try:
        tg, _ = read_graph(args.tree)
    except OSError as exc:
        raise OSError(f"cannot read {args.tree}: {exc.strerror}") from exc
    t = TreeSample(tg.n, list(tg.edges), "spanning")
    spanning = tg.n == g.n and t.is_tree() and all(g.has_edge(u, v) and g.weight(u, v) == w for u, v, w in tg.edges)
    out = {"is_tree": t.is_tree(), "spanning_subgraph": spanning}
    ok = t.is_tree() and tg.n == g.n
    if ok:
        out["terminal_distortion"] = eval_distortion(g, t, "terminal", terms).distortion
        out["all_pairs_distortion"] = eval_distortion(g, t, "all").distortion
        out["lightness"] = lightness(t, g)
        if args.max_distortion is not None:
            ok &= out["terminal_distortion"] <= args.max_distortion * (1 + 1e-9)
        if args.max_lightness is not None:
            ok &= out["lightness"] <= args.max_lightness * (1 + 1e-9)
    out["pass"] = ok
    return out, ok


def cmd_bench(args):
    from .harness import ExperimentConfig, rows_to_csv, rows_to_json, run_experiment

    inst = {}
    for part in args.instance.split(","):
        if "=" not in part:
            raise UsageError(f"bad --instance item {part!r}")
        key, val = part.split("=", 1)
        inst[key] = _num(val)
    if "family" not in inst:
        raise UsageError("--instance needs family=...")
    sweep = {}
    for item in args.sweep:
        if "=" not in item:
            raise UsageError(f"bad --sweep item {item!r}")
        key, vals = item.split("=", 1)
        sweep[key] = [_num(v) for v in vals.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [args.seed]
    cfg = ExperimentConfig(args.algorithm, inst, seeds, args.samples, sweep, plot_path=args.plot,
                           record_runtime=args.record_runtime)
    rows = run_experiment(cfg)
    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return None, True


COMMANDS = {"gen": cmd_gen, "embed": cmd_embed, "spanner": cmd_spanner, "light-tree": cmd_light_tree,
            "frt": cmd_frt, "congestion": cmd_congestion, "petal": cmd_petal, "bisect": cmd_bisect,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.samples < 1:
        sys.stderr.write("termembed: --samples must be >= 1\n")
        return EXIT_IO
    try:
        report, ok = COMMANDS[args.verb](args)
    except UsageError as exc:
        sys.stderr.write(f"termembed: {exc}\n")
        return EXIT_IO
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"termembed: {exc}\n")
        return EXIT_IO
    if report is not None and not (args.verb == "gen" and not args.output):
        _emit(report, args.format)
    elif report is not None:
        _emit(report, args.format, sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
