"""Command-line interface: ``lrplab <subcommand> [options]``.

Exit codes:

    0  success
    2  usage error (bad flags)
    3  precondition or input error
    4  budget censoring: output written but incomplete
    5  verification failure
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from .errors import CapacityError, LRPError, PreconditionError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_BUDGET = 4
EXIT_VERIFY = 5


def _emit(obj, fmt: str, out=None) -> None:
    out = sys.stdout if out is None else out
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, default=_jsonable) + "\n")
        return
    rows = obj if isinstance(obj, list) else [obj]
    if not rows:
        return
    w = csv.DictWriter(out, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v, default=_jsonable) if isinstance(v, (list, dict)) else v)
                    for k, v in r.items()})


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serializable: {type(o)}")


# --------------------------------------------------------------------------
# Shared options
# --------------------------------------------------------------------------

def _add_model(p: argparse.ArgumentParser, need_L: bool = False) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d", type=int, default=1, help="dimension (default 1)")
    g.add_argument("--s", type=float, default=1.5, help="decay exponent (default 1.5)")
    g.add_argument("--beta", type=float, default=1.0, help="amplitude (default 1.0)")
    g.add_argument("--L", type=int, required=need_L, help="box radius")
    g.add_argument("--seed", type=int, default=0, help="sample seed (default 0)")
    g.add_argument("--no-nn", action="store_true", help="do not force nearest-neighbour edges")


def _add_graph_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph file (.txt = text edge list, else binary); "
                                   "without it a graph is sampled from the model flags")
    _add_model(p)
    p.add_argument("--max-vertices", type=float, default=2e8, help="vertex budget")


def _add_format(p: argparse.ArgumentParser, default: str = "json") -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default,
                   help=f"output format (default {default})")


def _add_schedule(p: argparse.ArgumentParser) -> None:
    from .model import demo_schedule
    g = p.add_argument_group("schedule (defaults: the demo schedule)")
    dflt = demo_schedule.__kwdefaults__
    g.add_argument("--mode", choices=("demo", "strict"), default="demo")
    for name in ("gamma", "zeta", "eta", "theta", "epsilon", "s_prime"):
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=dflt[name])
    g.add_argument("--delta", type=float, default=None, help="default: from k2 - k1")


def _params(args, L=None):
    from .model import ModelParams
    L = args.L if L is None else L
    if L is None:
        raise PreconditionError("--L is required when no --graph is given")
    return ModelParams(args.d, args.s, args.beta, L, seed=args.seed, nn_always=not args.no_nn)


def _graph(args):
    from .graphio import load_graph
    from .sampler import sample_graph
    if args.graph:
        return load_graph(args.graph)
    return sample_graph(_params(args), max_vertices=int(args.max_vertices))


def _vertex(graph, text):
    if text is None:
        return graph.origin
    coords = np.array([int(t) for t in str(text).split(",")], dtype=np.int64)
    if coords.size != graph.d:
        raise PreconditionError(f"vertex {text!r} needs {graph.d} coordinates")
    if np.any(np.abs(coords) > graph.L):
        raise PreconditionError(f"vertex {text!r} lies outside [-L, L]^d")
    return int(graph.index(coords))


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_sample(args) -> int:
    from .graphio import save_graph
    from .sampler import expected_edge_count, sample_graph
    params = _params(args)
    g = sample_graph(params, max_vertices=int(args.max_vertices), max_edges=int(args.max_edges))
    if args.out:
        save_graph(g, args.out)
    _emit({**params.to_dict(), "n_vertices": g.n_vertices, "n_long_edges": g.n_long_edges,
           "expected_long_edges": expected_edge_count(params), "out": args.out}, args.format)
    return EXIT_OK


def cmd_distance(args) -> int:
    from .metrics import graph_distance
    g = _graph(args)
    x, y = _vertex(g, args.x), _vertex(g, args.y)
    _emit({"x": args.x, "y": args.y, "x_index": x, "y_index": y,
           "distance": graph_distance(g, x, y)}, args.format)
    return EXIT_OK


def cmd_diameter(args) -> int:
    from .metrics import diameter_exact
    g = _graph(args)
    res = diameter_exact(g, max_bfs=args.max_bfs or None, strategy=args.strategy)
    _emit({"L": g.L, "d": g.d, "seed": g.seed, **res.to_dict()}, args.format)
    if not res.exact:
        print(f"warning: BFS budget exhausted; diameter in [{res.lower}, {res.upper}]",
              file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_ball(args) -> int:
    from .fitting import fit_ball_curve
    from .metrics import ball_growth
    g = _graph(args)
    curve = ball_growth(g, _vertex(g, args.source), args.r_max)
    if args.format == "csv":
        sys.stdout.write(curve.to_csv())
        return EXIT_OK
    out = curve.to_dict()
    try:
        out["fit"] = fit_ball_curve(curve).to_dict()
    except PreconditionError as exc:
        out["fit"] = None
        out["fit_error"] = str(exc)
    _emit(out, "json")
    return EXIT_OK


def cmd_hierarchy(args) -> int:
    from .hierarchy import (LinkIndex, PathCertificate, bad_components, build_block_tree,
                            certificate_bound, classify_blocks, construct_path,
                            sample_good_pairs)
    from .metrics import graph_distance
    from .model import build_schedule
    g = _graph(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sched = build_schedule(g.L, s_prime=args.s_prime, gamma=args.gamma, zeta=args.zeta,
                               eta=args.eta, theta=args.theta, epsilon=args.epsilon,
                               delta=args.delta, mode=args.mode, d=g.d, s=g.params.s)
    tree = build_block_tree(g.L, sched, g.d)
    labels = classify_blocks(g, tree, sched)
    comps = bad_components(labels, tree)
    out = {"schedule": sched.to_dict(), "summary": labels.summary(), "T_L": comps.T_L,
           "certificate_bound": certificate_bound(tree)}
    status = EXIT_OK
    if args.pairs:
        links = LinkIndex(g, tree, labels)
        certs = []
        for x, y in sample_good_pairs(labels, args.pairs, rng=args.seed):
            res = construct_path(g, tree, labels, x, y, links)
            if isinstance(res, PathCertificate):
                try:
                    res.replay(g)
                    D = graph_distance(g, x, y)
                    ok = D <= res.length <= out["certificate_bound"]
                except AssertionError:
                    ok, D = False, None
                if not ok:
                    status = EXIT_VERIFY
                certs.append({"x": x, "y": y, "length": res.length, "distance": D, "ok": ok})
            else:
                certs.append({"x": x, "y": y, "failure": res.reason, "level": res.level})
        out["certificates"] = certs
    _emit(out, "json")
    return status


def cmd_verify(args) -> int:
    from . import theory
    report = {}
    C = theory.find_C(1, 1.5, 6.0, 1.0, args.n_max)
    kp = theory.KFunctionParams(d=1, s_prime=1.5, p=6.0, c0=1.0, c=1.0, C=C)
    rep = theory.verify_k_inequality(kp, args.n_max)
    report["k_inequality"] = {"C": C, "passed": rep.passed, "worst_n": rep.worst_n,
                              "worst_log_ratio": rep.worst_log_ratio,
                              "precision_flag": rep.precision_flag}
    report["delta_lemma"] = {}
    for d in (1, 2, 3, 4):
        r = theory.delta_lemma_check(d)
        report["delta_lemma"][d] = {"gap_positive": r["gap_positive"],
                                    "monotone": r["monotone"], "gap_min": r["gap_min"]}
    sched = theory.strict_example_schedule()
    env = theory.search_envelope(sched)
    report["envelope"] = {"passed": env.passed, "c2_env": env.c2_env, "c6": env.c6,
                          "k1": sched.k1, "k2": sched.k2, "min_slack": env.min_slack,
                          "levels": len(env.levels)}
    sums = [theory.lattice_sum_check(d, sp, K, m_max=m)
            for d, sp, m in ((1, 1.5, 1_000_000), (2, 3.0, 20_000)) for K in (1, 10, 100)]
    report["a2_sum"] = sums
    if args.mc:
        chk = theory.check_trapman_bound(1, 1.5, 1.0, args.s_prime, n_samples=args.mc)
        report["trapman_mc"] = chk.to_dict()
    passed = (report["k_inequality"]["passed"]
              and all(v["gap_positive"] and v["monotone"] for v in report["delta_lemma"].values())
              and report["envelope"]["passed"]
              and all(v["passed"] for v in sums)
              and (not args.mc or report["trapman_mc"]["passed"]))
    report["all_passed"] = bool(passed)
    _emit(report, "json")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_sweep(args) -> int:
    from .experiments import ExperimentConfig, run_sweep
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig(d=args.d, s=args.s, beta=args.beta, nn_always=not args.no_nn,
                               L_values=tuple(args.L_values), seeds=args.seeds,
                               seed_base=args.seed, pairs=args.pairs,
                               ball_r_max=args.ball_r_max, hierarchy=args.hierarchy,
                               max_bfs=args.max_bfs, wall_clock=args.wall_clock,
                               workers=args.workers)
    if args.out:
        cfg.out_csv = args.out
    if args.json:
        cfg.out_json = args.json
    res = run_sweep(cfg)
    if not cfg.out_csv:
        sys.stdout.write(res.to_csv())
    if res.censored:
        print(f"warning: {res.censored} cells censored by budgets", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_fit(args) -> int:
    from .experiments import read_csv_rows
    from .fitting import fit_exponent, transform_points
    rows = read_csv_rows(args.csv)
    if not rows:
        raise PreconditionError("empty CSV")
    xcol = args.x_col or ("L" if args.transform == "D" else "r")
    ycol = args.y_col or ("diameter" if args.transform == "D" else "ball_size")
    xs, ys = [], []
    for r in rows:
        if xcol not in r or ycol not in r:
            raise PreconditionError(f"CSV lacks columns {xcol!r} / {ycol!r}")
        if r.get("censored") in ("1", "True") or r.get("status", "ok") != "ok":
            continue
        if r[ycol] in ("", "inf"):
            continue
        xs.append(float(r[xcol]))
        ys.append(float(r[ycol]))
    if args.median:
        groups = {}
        for x, y in zip(xs, ys):
            groups.setdefault(x, []).append(y)
        xs = sorted(groups)
        ys = [float(np.median(groups[x])) for x in xs]
    fit = fit_exponent(transform_points(xs, ys, args.transform), args.transform)
    _emit(fit.to_dict(), args.format)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrplab",
                                 description="Long-range percolation experiments and checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a graph and optionally save it")
    _add_model(p, need_L=True)
    p.add_argument("--out", help="output file (.txt = text, else binary)")
    p.add_argument("--max-vertices", type=float, default=2e8)
    p.add_argument("--max-edges", type=float, default=1e8)
    _add_format(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("distance", help="graph distance between two sites")
    _add_graph_source(p)
    p.add_argument("--x", required=True, help="comma-separated coordinates in [-L, L]")
    p.add_argument("--y", required=True, help="comma-separated coordinates in [-L, L]")
    _add_format(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("diameter", help="exact diameter")
    _add_graph_source(p)
    p.add_argument("--max-bfs", type=int, default=0, help="BFS budget (0 = unlimited)")
    p.add_argument("--strategy", choices=("bounds", "fringe"), default="bounds")
    _add_format(p)
    p.set_defaults(func=cmd_diameter)

    p = sub.add_parser("ball", help="intrinsic ball growth curve")
    _add_graph_source(p)
    p.add_argument("--source", help="comma-separated coordinates (default: origin)")
    p.add_argument("--r-max", type=int, default=50)
    _add_format(p)
    p.set_defaults(func=cmd_ball)

    p = sub.add_parser("hierarchy", help="good/bad block classification and certificates")
    _add_graph_source(p)
    _add_schedule(p)
    p.add_argument("--pairs", type=int, default=0, help="good pairs to certify")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("verify", help="run the numeric theory checks")
    p.add_argument("--n-max", type=int, default=10_000)
    p.add_argument("--mc", type=int, default=0,
                   help="Monte Carlo samples for the tail bound (0 = skip)")
    p.add_argument("--s-prime", type=float, default=1.48,
                   help="s' for the tail bound check (must be below s = 1.5)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", help="INI config file; overrides the flags below")
    _add_model(p)
    p.add_argument("--L-values", type=int, nargs="+", default=[4096])
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--pairs", type=int, default=0)
    p.add_argument("--ball-r-max", type=int, default=0)
    p.add_argument("--hierarchy", action="store_true")
    p.add_argument("--max-bfs", type=int, default=0)
    p.add_argument("--wall-clock", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV output (default: stdout)")
    p.add_argument("--json", help="JSON output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="OLS exponent fit from a CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--transform", choices=("D", "ball"), required=True)
    p.add_argument("--x-col")
    p.add_argument("--y-col")
    p.add_argument("--median", action="store_true", help="fit per-abscissa medians")
    _add_format(p)
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (LRPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
