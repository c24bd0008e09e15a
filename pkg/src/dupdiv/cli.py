"""Command-line entry point: ``dupdiv <subcommand> ...``.

Exit status: 0 success, 2 validation error, 3 tolerance failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import statlab
from .forward import TruncationWarning, discrete_recursion, quasi_stationarity_check
from .graph import census_to_distribution, census, complete_graph, from_edges, run_graph
from .model import SpecError, basic, classify, config_digest, region_boundaries, spec_from_config
from .tagged import (CTMC_VARIANTS, DISCRETE_VARIANTS, build_coupled_pair, simulate_ctmc,
                     simulate_discrete_tagged)
from .timechange import quantile_couple_many

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 2, 3
CONFIG_KEYS = {"model", "seed", "initial_graph", "experiment", "extra_links", "output"}
SUITES = ("absorption", "clt", "w-limit", "stationary", "quasi", "coupling", "rewiring", "graph",
          "enumeration")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read config {path!r}: {e.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: top level must be an object")
    unknown = sorted(set(cfg) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown key(s) {unknown}; allowed {sorted(CONFIG_KEYS)}")
    return cfg


def model_from(cfg: dict, args) -> object:
    if getattr(args, "p", None) is not None:
        return basic(args.p, args.q if args.q is not None else 0.0)
    if "model" not in cfg:
        raise UsageError("a model is required (config 'model' section or --p/--q)")
    return spec_from_config(cfg["model"])


def resolve_seed(cfg: dict, args) -> int:
    """--seed wins, then DD_SEED, then the config seed, then 0."""
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("DD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DD_SEED must be an integer, got {env!r}") from None
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise UsageError("seed must be a 64-bit nonnegative integer")
    return seed


def run_digest(cfg: dict, args, seed: int) -> str:
    flags = {k: v for k, v in sorted(vars(args).items())
             if k not in ("func", "out", "config", "workers", "seed")}
    return config_digest({"config": cfg, "flags": flags, "seed": seed})


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


# ---------------------------------------------------------------- output

def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _csv(header: list[str], rows, digest: str | None) -> str:
    buf = io.StringIO()
    if digest:
        buf.write(f"# config_digest={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---------------------------------------------------------------- subcommands

def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    rows = []
    procs = ["X_star", "X_tilde"] + (["X_star_b"] if spec.multi_births is not None else [])
    for proc in procs:
        rep = classify(spec, proc)
        rows.append([proc, rep.verdict, rep.margin,
                     "" if rep.eta_star is None else rep.eta_star, rep.region or ""])
    _emit(_csv(["process", "verdict", "margin", "eta_star", "region"], rows, None), args.out)
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    n = args.grid
    if n < 1:
        raise UsageError("--grid must be positive")
    pts = (np.arange(n) + 0.5) / n
    rows = []
    for p in pts:
        q1, q2 = region_boundaries(float(p))
        for q in pts:
            rows.append([float(p), float(q), classify(basic(float(p), float(q))).region,
                         q1, q2])
    _emit(_csv(["p", "q", "region", "q1", "q2"], rows, None), args.out)
    return EXIT_OK


def initial_graph(cfg: dict, seed=0):
    ig = cfg.get("initial_graph", {"m0": 5})
    unknown = set(ig) - {"m0", "edges"}
    if unknown:
        raise UsageError(f"initial_graph: unknown key(s) {sorted(unknown)}")
    if "edges" in ig:
        edges = [tuple(e) for e in ig["edges"]]
        n = ig.get("m0", 1 + max((max(e) for e in edges), default=0))
        return from_edges(int(n), edges, seed)
    return complete_graph(int(ig["m0"]), seed)


def _replica(job):
    g0, spec, target, seed, cps, links = job
    return run_graph(g0, spec, target, seed, cps, extra_links=links)


def cmd_simulate_graph(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    seed = resolve_seed(cfg, args)
    g0 = initial_graph(cfg)
    cps = args.checkpoints or [args.target_m]
    if min(cps) < g0.m or max(cps) > args.target_m:
        raise UsageError(f"checkpoints must lie in [{g0.m}, {args.target_m}]")
    links = cfg.get("extra_links", "independent")
    seeds = np.random.SeedSequence(seed).spawn(args.replicas)
    jobs = [(g0, spec, args.target_m, s, cps, links) for s in seeds]
    if args.workers > 1 and args.replicas > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            results = list(ex.map(_replica, jobs))
    else:
        results = [_replica(j) for j in jobs]
    digest = run_digest(cfg, args, seed)
    fmt = args.format or ("json" if (args.out or "").endswith(".json") else "csv")
    if fmt == "json":
        doc = {"config_digest": digest, "seed": seed,
               "censuses": [[{"replica": i, "m": c.m, "counts": {str(k): v for k, v in c.counts.items()}}
                             for c in res] for i, res in enumerate(results)]}
        _emit(json.dumps(doc, sort_keys=True, indent=1) + "\n", args.out)
    else:
        rows = [[i, c.m, k, n] for i, res in enumerate(results) for c in res
                for k, n in c.counts.items()]
        _emit(_csv(["replica", "m", "degree", "count"], rows, digest), args.out)
    return EXIT_OK


def cmd_simulate_tagged(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    seed = resolve_seed(cfg, args)
    digest = run_digest(cfg, args, seed)
    seeds = np.random.SeedSequence(seed).spawn(args.paths)
    lines = []
    if args.variant in CTMC_VARIANTS:
        if args.t_max is None:
            raise UsageError(f"variant {args.variant} needs --t-max")
        grid = args.checkpoints or list(np.linspace(0.0, args.t_max, 11))
        for i, s in enumerate(seeds):
            path = simulate_ctmc(spec, args.variant, args.x0, args.t_max, s)
            for t, x, z in zip(grid, path.state_at(grid), path.z_at(grid)):
                lines.append({"config_digest": digest, "path": i, "t": float(t), "x": int(x),
                              "z": int(z), "capped": path.capped})
    elif args.variant in DISCRETE_VARIANTS:
        if args.m_max is None:
            raise UsageError(f"variant {args.variant} needs --m-max")
        m0 = args.m0 if args.m0 is not None else args.x0 + 1
        grid = args.checkpoints or sorted({int(round(v)) for v in
                                           np.geomspace(m0, args.m_max, 11)})
        for i, s in enumerate(seeds):
            path = simulate_discrete_tagged(spec, args.variant, args.x0, m0, args.m_max, s)
            for m, y, j in zip(grid, path.state_at(grid), path.z_at(grid)):
                lines.append({"config_digest": digest, "path": i, "m": int(m), "y": int(y),
                              "j": int(j), "capped": path.capped})
    else:
        raise UsageError(f"unknown variant {args.variant!r}; choose from "
                         f"{sorted(CTMC_VARIANTS + DISCRETE_VARIANTS)}")
    _emit("".join(json.dumps(r, sort_keys=True) + "\n" for r in lines), args.out)
    return EXIT_OK


def cmd_expected(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    g0 = initial_graph(cfg)
    if args.m0 is not None and args.m0 != g0.m:
        if "initial_graph" in cfg:
            raise UsageError(f"--m0 {args.m0} disagrees with the initial graph size {g0.m}")
        g0 = complete_graph(args.m0)
    if args.m < g0.m:
        raise UsageError("--m must be at least m0")
    p0 = census_to_distribution(census(g0))
    variant = "rewiring" if spec.r > 0 else "base"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        out = discrete_recursion(p0, spec, g0.m, args.m, K=args.trunc, variant=variant,
                                 deficit_bound=args.deficit_bound)
    digest = run_digest(cfg, args, 0)
    rows = [[k, v] for k, v in enumerate(out.mass)]
    text = _csv(["k", "mass"], rows, digest)
    _emit(text, args.out)
    if out.status != "ok":
        print(f"truncation deficit {out.deficit:.3g} exceeds {args.deficit_bound:.3g}",
              file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_quasi_check(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    rows, ok = [], True
    for i in args.i:
        qc = quasi_stationarity_check(spec, i, args.t_grid, args.trunc)
        good = qc.reliable and qc.max_rel_error <= args.tol
        ok &= good
        rows.append([i, qc.max_rel_error, qc.deficit, int(qc.reliable), int(good)])
    digest = run_digest(cfg, args, 0)
    _emit(_csv(["i", "max_rel_error", "deficit", "reliable", "pass"], rows, digest), args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def run_suite(suite: str, spec, seed: int, params: dict) -> statlab.ExperimentReport:
    if suite == "absorption":
        params.setdefault("x0", 1)
        params.setdefault("horizon", 50.0)
        return statlab.absorption_probability(spec, seed=seed, **params)
    if suite == "clt":
        return statlab.clt_test(spec, seed=seed, **params)
    if suite == "w-limit":
        return statlab.w_stabilization(spec, seed=seed, **params)
    if suite == "stationary":
        return statlab.stationary_agreement(spec, seed=seed, **params)
    if suite == "quasi":
        return statlab.quasi_report(spec, **params)
    if suite == "coupling":
        return statlab.coupling_report(spec, seed=seed, **params)
    if suite == "rewiring":
        return statlab.rewiring_report(spec, seed=seed, **params)
    if suite == "graph":
        return statlab.graph_forward_agreement(spec, seed=seed, **params)
    if suite == "enumeration":
        # decimal strings give exact rationals: 0.3 -> 3/10
        params.setdefault("p", str(Fraction(repr(spec.p))))
        params.setdefault("q", str(Fraction(repr(spec.q))))
        return statlab.enumeration_report(**params)
    raise UsageError(f"unknown suite {suite!r}; choose from {list(SUITES)}")


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    spec = model_from(cfg, args)
    seed = resolve_seed(cfg, args)
    params = dict(cfg.get("experiment", {}))
    try:
        rep = run_suite(args.suite, spec, seed, params)
    except TypeError as e:
        raise UsageError(f"experiment parameters: {e}") from None
    doc = rep.to_dict()
    doc["run_digest"] = run_digest(cfg, args, seed)
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def cmd_couple(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(cfg, args)
    if args.quantile is not None:
        if len(args.quantile) != 3:
            raise UsageError("--quantile expects m,a,b")
        m, a, b = args.quantile
        if a <= -1 or b <= 0 or m < 0:
            raise UsageError("--quantile needs m >= 0, a > -1, b > 0")
        u = np.random.default_rng(seed).random(args.samples)
        e, v, r = quantile_couple_many(float(m), float(a), float(b), u)
        rows = zip(u, e, v, r.astype(np.int64))
        digest = run_digest(cfg, args, seed)
        _emit(_csv(["u", "E", "V", "r"], rows, digest), args.out)
        return EXIT_OK
    spec = model_from(cfg, args)
    pair = build_coupled_pair(spec, args.j0, args.m0, args.n_jumps, seed)
    rows = zip(range(len(pair.states)), pair.states, pair.S, pair.S_tilde, pair.N, pair.delta)
    digest = run_digest(cfg, args, seed)
    _emit(_csv(["n", "state", "S", "S_tilde", "N", "delta"], rows, digest), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dupdiv", description="Duplication-divergence graphs and "
                                 "their tagged-degree processes.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True, model_flags=True):
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--out", help="output file (default stdout)")
        if model_flags:
            p.add_argument("--p", type=float, help="basic model retention probability")
            p.add_argument("--q", type=float, help="basic model full-copy probability")
        if seed:
            p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("classify", help="regime of X*, X~ and the (p,q) region"), seed=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("phase-diagram", help="CSV of regions over a (p,q) grid")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_phase_diagram)

    p = common(sub.add_parser("simulate-graph", help="grow graphs and record degree censuses"))
    p.add_argument("--target-m", type=int, required=True)
    p.add_argument("--checkpoints", type=_int_list)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="replica worker processes (output does not depend on this)")
    p.set_defaults(func=cmd_simulate_graph)

    p = common(sub.add_parser("simulate-tagged", help="tagged-degree paths as JSON lines"))
    p.add_argument("--variant", default="base")
    p.add_argument("--x0", type=int, default=1)
    p.add_argument("--m0", type=int)
    p.add_argument("--t-max", type=float)
    p.add_argument("--m-max", type=int)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--checkpoints", type=_float_list)
    p.set_defaults(func=cmd_simulate_tagged)

    p = common(sub.add_parser("expected", help="expected degree proportions by recursion"),
               seed=False)
    p.add_argument("--m0", type=int)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trunc", type=int)
    p.add_argument("--deficit-bound", type=float, default=1e-6)
    p.set_defaults(func=cmd_expected)

    p = common(sub.add_parser("quasi-check", help="check the quasi-stationarity identity"),
               seed=False)
    p.add_argument("--i", type=_int_list, default=[1, 3, 5])
    p.add_argument("--t-grid", type=_float_list, default=[0.5, 1.0, 2.0, 3.0])
    p.add_argument("--trunc", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_quasi_check)

    p = common(sub.add_parser("verify", help="run a statistical verification suite"))
    p.add_argument("--suite", required=True, choices=SUITES)
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("couple", help="quantile coupling samples or a coupled pair"))
    p.add_argument("--quantile", type=_float_list, help="m,a,b: dump (U, E, V, r) samples")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--j0", type=int, default=1)
    p.add_argument("--m0", type=int, default=2)
    p.add_argument("--n-jumps", type=int, default=200)
    p.set_defaults(func=cmd_couple)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, SpecError, ValueError) as e:
        print(f"dupdiv {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
