"""Command-line interface.

Every output file records the config hash and the seed. CSV outputs put
them in ``# key: value`` comment lines ahead of the header row. JSON
outputs store them as top-level keys.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import experiments as ex
from . import oracle
from .config import ExperimentConfig
from .covariance import CovarianceModel
from .errors import MRAError
from .executor import ScheduleTrace, run_upward
from .geometry import Domain
from .inference import fit as fit_model
from .io import read_locations, read_table, write_csv, write_json
from .metrics import log_score, score
from .predict import predict as predict_dist
from .prior import compute_prior, dump_prior

log = logging.getLogger("mra")


# -- shared helpers --------------------------------------------------------

def _meta(cfg: ExperimentConfig, seed: int, **extra) -> dict:
    return {"config_hash": cfg.digest(), "seed": seed, **extra}


def _out(args, name: str) -> str:
    return os.path.join(args.out, name)


def simulate_data(cfg: ExperimentConfig, seed: int, n: int | None = None) -> tuple:
    """Simulated ``(locations, values, spacing)``; the spacing is set only
    for 1-D regular grids."""
    n = cfg.data.n if n is None else n
    model = cfg.model.build()
    dom = cfg.partition.domain
    if dom.dim == 1:
        lo, hi = float(dom.lower[0]), float(dom.upper[0])
        S = oracle.regular_grid(n, lo, hi).reshape(-1, 1)
        y = oracle.simulate_1d_circulant(model, n, seed, spacing=(hi - lo) / n)
        return S, y, (hi - lo) / n
    rng = np.random.default_rng(seed)
    S = dom.lower + (dom.upper - dom.lower) * rng.random((n, dom.dim))
    y = oracle.simulate_dense(model, S, seed=rng, cap=cfg.dense_cap)
    return S, y, None


def load_data(args, cfg: ExperimentConfig) -> tuple:
    if args.data or cfg.data.csv:
        S, y = read_locations(args.data or cfg.data.csv, cfg.partition.domain.dim)
        if y is None:
            raise MRAError("data file needs a value column after the coordinates")
        return S, y, None
    return simulate_data(cfg, args.seed)


def _design(cfg: ExperimentConfig, n: int):
    return ex.design_for("mra", n, cfg)


def _tree(cfg, S, y):
    return _design(cfg, len(y)).tree(cfg.partition.domain, S, y, cfg.partition.strategy)


def _coord_names(dim: int) -> list:
    return [f"s{i}" for i in range(dim)]


# -- subcommands -----------------------------------------------------------

def cmd_simulate(args, cfg):
    S, y, _ = simulate_data(cfg, args.seed, args.n)
    path = _out(args, "simulate.csv")
    write_csv(path, _coord_names(S.shape[1]) + ["value"],
              (list(s) + [v] for s, v in zip(S, y)), _meta(cfg, args.seed))
    write_json(path + ".json", {**_meta(cfg, args.seed), "n": len(y),
                                "model": cfg.to_dict()["model"]})
    print(path)


def cmd_loglik(args, cfg):
    S, y, _ = load_data(args, cfg)
    model = cfg.model.build()
    tree = _tree(cfg, S, y)
    trace = ScheduleTrace() if args.trace_schedule else None
    prior = compute_prior(tree, model, args.workers)
    post = run_upward(tree, prior, workers=args.workers, trace=trace)
    result = {**_meta(cfg, args.seed), "n": len(y), "branching": list(tree.branching),
              "loglik": post.loglik}
    if args.exact:
        result["loglik_exact"] = oracle.exact_loglik(model, S, y, cap=cfg.dense_cap)
    if trace is not None:
        trace.write_csv(args.trace_schedule)
    write_json(_out(args, "loglik.json"), result)
    print(format(post.loglik, ".17g"))


def cmd_fit(args, cfg):
    S, y, _ = load_data(args, cfg)
    tree = _tree(cfg, S, y)
    spec = cfg.model
    res = fit_model(tree, None, spec.family, (spec.variance, spec.range, spec.nugget),
                    fix_nugget=args.fix_nugget, max_iter=args.max_iter, workers=args.workers)
    meta = _meta(cfg, args.seed)
    write_csv(_out(args, "fit_trace.csv"), ["iteration", "variance", "range", "nugget", "loglik"],
              res.trace_rows(), meta)
    write_json(_out(args, "fit.json"), {
        **meta, "variance": res.theta[0], "range": res.theta[1], "nugget": res.theta[2],
        "loglik": res.loglik, "iterations": res.iterations, "converged": res.converged,
        "evaluations": len(res.evaluations)})
    if args.dump_prior:
        model = CovarianceModel(spec.family, *res.theta)
        with open(args.dump_prior, "wb") as fh:
            dump_prior(compute_prior(tree, model, args.workers), fh)
    print(" ".join(format(v, ".17g") for v in res.theta))


def cmd_predict(args, cfg):
    S, y, _ = load_data(args, cfg)
    dim = S.shape[1]
    if args.locations:
        S_P, _ = read_locations(args.locations, dim, with_values=False)
    else:
        dom = cfg.partition.domain
        if dim != 1:
            raise MRAError("--grid is only available in 1-D; pass --locations")
        S_P = oracle.regular_grid(args.grid, dom.lower[0], dom.upper[0]).reshape(-1, 1)
    tree = _tree(cfg, S, y)
    trace = ScheduleTrace() if args.trace_schedule else None
    prior = compute_prior(tree, cfg.model.build(), args.workers)
    post = run_upward(tree, prior, workers=args.workers, trace=trace)
    dist = predict_dist(post, S_P, workers=args.workers, trace=trace)
    mean, var = dist.marginals(add_nugget=args.with_nugget)
    meta = _meta(cfg, args.seed)
    names = _coord_names(dim)
    write_csv(_out(args, "predict.csv"), names + ["mean", "sd"],
              (list(s) + [m, math.sqrt(v)] for s, m, v in zip(S_P, mean, var)), meta)
    if args.samples:
        draws = dist.sample(args.samples, args.seed)
        write_csv(_out(args, "samples.csv"), names + [f"draw{k}" for k in range(args.samples)],
                  (list(s) + list(d) for s, d in zip(S_P, draws.T)), meta)
    if trace is not None:
        trace.write_csv(args.trace_schedule)
    print(_out(args, "predict.csv"))


def cmd_score(args, cfg):
    header, pred = read_table(args.pred)
    if header is None or "mean" not in header or "sd" not in header:
        raise MRAError("prediction CSV needs 'mean' and 'sd' columns")
    _, truth = read_table(args.truth)
    actual = truth[:, -1]
    rep = score(pred[:, header.index("mean")], pred[:, header.index("sd")], actual)
    write_json(_out(args, "score.json"), {**_meta(cfg, args.seed), **rep.to_dict()})
    print(json.dumps(rep.to_dict(), sort_keys=True))


def run_compare(cfg: ExperimentConfig, workers: int = 1) -> tuple:
    """Rows of ``(n, seed, competitor, status, loglik, seconds, rmspe, crps)``
    plus a summary of seed-averaged log-scores."""
    ladder = cfg.n_ladder or [cfg.data.n]
    n_max = ladder[-1]
    model = cfg.model.build()
    dom = cfg.partition.domain
    rows = []
    for seed in cfg.seeds:
        S_full, y_full, _ = simulate_data(cfg, seed, n_max)
        for n in ladder:
            S, y, sub, spacing = ex.subset(S_full, y_full, n, cfg.subset, dom)
            if dom.dim != 1:
                spacing = None
            gap = cfg.holdout_gap
            test = ex.holdout_split(S, y, cfg.holdout_fraction, gap, seed)
            for name in cfg.competitors:
                ll, secs, status = ex.competitor_loglik(name, model, sub, S, y, cfg, spacing, workers)
                rm = cr = math.nan
                if test.any() and (status == "ok" or name == "local"):
                    mean, sd, pstatus = ex.competitor_predict(
                        name, model, sub, S[~test], y[~test], S[test], cfg, workers)
                    if pstatus == "ok":
                        rep = score(mean, sd, y[test])
                        rm, cr = rep.rmspe, rep.crps_mean
                        if name == "local":
                            status = "ok"
                rows.append((n, seed, name, status, ll, secs, rm, cr))
    return rows, summarize(rows)


def summarize(rows) -> dict:
    """Seed-averaged log-likelihood per (n, competitor) with difference and
    ratio against the exact reference (dense when available, else
    Durbin-Levinson)."""
    out = {}
    for n in sorted({r[0] for r in rows}):
        by = {}
        for _, _, name, status, ll, *_ in (r for r in rows if r[0] == n):
            if status == "ok" and np.isfinite(ll):
                by.setdefault(name, []).append(ll)
        means = {k: float(np.mean(v)) for k, v in by.items()}
        ref_name = "exact" if "exact" in means else ("dl-exact" if "dl-exact" in means else None)
        entry = {}
        for name, m in means.items():
            e = {"loglik_mean": m, "seeds": len(by[name])}
            if ref_name is not None:
                e.update(log_score(m, means[ref_name]))
            entry[name] = e
        out[str(n)] = {"reference": ref_name, "competitors": entry}
    return out


def cmd_compare(args, cfg):
    rows, summary = run_compare(cfg, args.workers)
    meta = _meta(cfg, args.seed, seeds=",".join(map(str, cfg.seeds)))
    write_csv(_out(args, "compare.csv"),
              ["n", "seed", "competitor", "status", "loglik", "seconds", "rmspe", "crps"], rows, meta)
    write_json(_out(args, "compare_summary.json"), {**_meta(cfg, args.seed), "seeds": cfg.seeds,
                                                    "subset": cfg.subset, "results": summary})
    for r in rows:
        print(f"n={r[0]} seed={r[1]} {r[2]:<9} {r[3]:<22} loglik={r[4]:.6f} t={r[5]:.3f}s")


def run_bench(cfg: ExperimentConfig, seed: int = 0, repeats: int = 1) -> tuple:
    model = cfg.model.build()
    rows = []
    for n in cfg.n_ladder:
        rows.append(ex.bench_mra(n, model, int(cfg.partition.r), cfg.partition.J, repeats, seed))
    for n in cfg.dense_ladder:
        rows.append(ex.bench_dense(n, model, repeats, seed))
    slopes = {}
    for method in ("mra", "dense"):
        sel = [r for r in rows if r["method"] == method]
        if len(sel) >= 2:
            ns = [r["n"] for r in sel]
            slopes[method] = {"time": ex.fit_slope(ns, [r["seconds"] for r in sel]),
                              "memory": ex.fit_slope(ns, [r["peak_bytes"] for r in sel])}
    return rows, slopes


def cmd_bench(args, cfg):
    rows, slopes = run_bench(cfg, args.seed, args.repeats)
    meta = _meta(cfg, args.seed)
    write_csv(_out(args, "bench.csv"), ["method", "n", "M", "seconds", "peak_bytes"],
              ([r["method"], r["n"], r["M"], r["seconds"], r["peak_bytes"]] for r in rows), meta)
    write_json(_out(args, "bench_summary.json"), {**meta, "slopes": slopes})
    for r in rows:
        print(f"{r['method']:<6} n={r['n']:<7} M={r['M']} {r['seconds']:.4f}s {r['peak_bytes']} B")
    for method, s in slopes.items():
        print(f"slope {method}: time {s['time']:.3f} memory {s['memory']:.3f}")


def partition_info(cfg: ExperimentConfig, n: int, S=None) -> dict:
    design = _design(cfg, n)
    dom: Domain = cfg.partition.domain
    if S is None:
        S = (oracle.regular_grid(n, dom.lower[0], dom.upper[0]).reshape(-1, 1) if dom.dim == 1
             else dom.lower + (dom.upper - dom.lower) * np.random.default_rng(0).random((n, dom.dim)))
    tree = design.tree(dom, S, None, cfg.partition.strategy)
    counts = [len(tree.leaf_obs.get(leaf, ())) for leaf in tree.leaves]
    return {"design": design.name, "depth": tree.depth, "branching": list(tree.branching),
            "regions_per_level": [len(tree.paths_at(m)) for m in range(tree.depth + 1)],
            "knots_per_level": tree.knot_counts(), "n": tree.n,
            "leaf_obs_min": int(min(counts)), "leaf_obs_max": int(max(counts))}


def cmd_partition_info(args, cfg):
    S = None
    if args.data or cfg.data.csv:
        S, _, _ = load_data(args, cfg)
    info = partition_info(cfg, args.n or (len(S) if S is not None else cfg.data.n), S)
    write_json(_out(args, "partition.json"), {**_meta(cfg, args.seed), **info})
    print(json.dumps(info, sort_keys=True))


# -- argument parsing ------------------------------------------------------

def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="JSON experiment config")
    p.add_argument("--seed", type=int, default=d(0), help="random seed (unsigned 64-bit)")
    p.add_argument("--workers", type=int, default=d(1), help="tree-parallel worker count")
    p.add_argument("--out", default=d(None), help="output directory")
    p.add_argument("--trace-schedule", default=d(None), metavar="PATH",
                   help="write a CSV task log of the parallel sweeps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mra", description="Multi-resolution GP approximation")
    _globals(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("simulate", cmd_simulate, "simulate data from the configured model")
    p.add_argument("--n", type=int)
    p = add("loglik", cmd_loglik, "M-RA log-likelihood of a data set")
    p.add_argument("--data")
    p.add_argument("--exact", action="store_true", help="also compute the dense log-likelihood")
    p = add("fit", cmd_fit, "maximum-likelihood fit of (variance, range, nugget)")
    p.add_argument("--data")
    p.add_argument("--fix-nugget", action="store_true")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--dump-prior", metavar="PATH", help="write prior factors at the fitted parameters")
    p = add("predict", cmd_predict, "posterior predictive means and sds")
    p.add_argument("--data")
    p.add_argument("--locations", help="CSV of prediction coordinates")
    p.add_argument("--grid", type=int, default=200, help="1-D grid size when no --locations")
    p.add_argument("--samples", type=int, default=0, help="number of joint predictive draws")
    p.add_argument("--with-nugget", action="store_true", help="predict noisy observations")
    p = add("score", cmd_score, "RMSPE, CRPS and log score of predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    add("compare", cmd_compare, "competitor log-likelihoods and timings")
    p = add("bench", cmd_bench, "timing and memory scaling")
    p.add_argument("--repeats", type=int, default=1)
    p = add("partition-info", cmd_partition_info, "describe the partition and knots")
    p.add_argument("--data")
    p.add_argument("--n", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.out is None:
            args.out = cfg.out
        os.makedirs(args.out, exist_ok=True)
        args.func(args, cfg)
    except (MRAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
