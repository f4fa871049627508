"""Competitor definitions, data subsetting and timing used by the CLI and
the experiment scripts."""
from __future__ import annotations

import math
import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from . import oracle
from .covariance import CovarianceModel
from .errors import ConfigurationError
from .geometry import Domain, KnotStrategy, make_tree, mra_depth
from .inference import loglikelihood, upward_sweep
from .metrics import score
from .predict import predict
from .prior import compute_prior


@dataclass
class Design:
    """A tree layout: branching factors plus per-level knot counts."""

    name: str
    branching: tuple
    r: list

    def tree(self, domain: Domain, S, y=None, strategy: str = "equidistant-interior"):
        return make_tree(domain, self.branching, KnotStrategy(strategy, self.r), S, y)


def mra_design(n: int, r: int = 30, J: int = 4) -> Design:
    M = mra_depth(n, r, J)
    return Design(f"mra(r={r},J={J},M={M})", (J,) * M, [r] * max(M, 1))


def fsa_fast_design(n: int, r: int = 240) -> Design:
    J = max(1, n // r)
    return Design(f"fsa-fast(r={r},J={J})", (J,), [r])


def fsa_slow_design(n: int, J: int = 64) -> Design:
    r = max(1, n // J)
    return Design(f"fsa-slow(r={r},J={J})", (J,), [r])


def block_design(n: int, block_size: int = 240) -> Design:
    J = max(1, n // block_size)
    return Design(f"block(J={J})", (J,), [0])


def design_for(name: str, n: int, cfg) -> Design:
    if name == "mra":
        if cfg.partition.branching:
            br = tuple(cfg.partition.branching)
            r = cfg.partition.r
            return Design(f"mra(branching={list(br)})", br, [r] * len(br) if np.ndim(r) == 0 else list(r))
        return mra_design(n, int(cfg.partition.r), cfg.partition.J)
    if name == "fsa-fast":
        return fsa_fast_design(n, cfg.fsa_fast_r)
    if name == "fsa-slow":
        return fsa_slow_design(n, cfg.fsa_slow_J)
    if name == "block":
        return block_design(n, cfg.block_size)
    raise ConfigurationError(f"{name} is not a tree design")


def subset(full_locs, full_vals, n: int, mode: str, domain: Domain) -> tuple:
    """Fixed-domain (equally spaced) or increasing-domain (first ``n``) subset.

    Returns ``(locations, values, subdomain, grid_spacing)``; the spacing is
    meaningful only for 1-D regular grids.
    """
    n_max = len(full_vals)
    if n > n_max:
        raise ConfigurationError(f"subset size {n} exceeds data size {n_max}")
    width = float(domain.upper[0] - domain.lower[0])
    if mode == "fixed":
        step = n_max // n
        idx = np.arange(n) * step
        return full_locs[idx], full_vals[idx], domain, step * width / n_max
    if domain.dim != 1:
        raise ConfigurationError("increasing-domain subsets are defined for 1-D data only")
    idx = np.arange(n)
    sub = Domain(domain.lower, domain.lower + width * n / n_max)
    return full_locs[idx], full_vals[idx], sub, width / n_max


def timed(fn, *args, **kwargs) -> tuple:
    t = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t


def peak_memory(fn, *args, **kwargs) -> int:
    """Peak traced allocation in bytes while running ``fn``."""
    tracemalloc.start()
    try:
        fn(*args, **kwargs)
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def mra_loglik(model: CovarianceModel, domain: Domain, S, y, design: Design,
               workers: int = 1, strategy: str = "equidistant-interior") -> float:
    tree = design.tree(domain, S, y, strategy)
    return loglikelihood(tree, model, workers=workers)


def competitor_loglik(name, model, domain, S, y, cfg, spacing=None, workers=1) -> tuple:
    """``(loglik, seconds, status)`` for one competitor."""
    n = len(y)
    if name == "exact":
        if n > cfg.dense_cap:
            return math.nan, math.nan, "skipped: cap"
        ll, t = timed(oracle.exact_loglik, model, S, y, cap=cfg.dense_cap)
        return ll, t, "ok"
    if name == "dl-exact":
        if domain.dim != 1 or spacing is None:
            return math.nan, math.nan, "skipped: needs 1-D regular grid"
        if n > cfg.dl_cap:
            return math.nan, math.nan, "skipped: cap"
        ll, t = timed(lambda: oracle.durbin_levinson_loglik(model.acvf(np.arange(n) * spacing), y,
                                                            cap=cfg.dl_cap))
        return ll, t, "ok"
    if name == "local":
        return math.nan, math.nan, "n/a: predictions only"
    if name == "fsa-slow" and n > cfg.fsa_slow_cap:
        return math.nan, math.nan, "skipped: cap"
    if n > cfg.mra_cap:
        return math.nan, math.nan, "skipped: cap"
    design = design_for(name, n, cfg)
    ll, t = timed(mra_loglik, model, domain, S, y, design, workers, cfg.partition.strategy)
    return ll, t, "ok"


def competitor_predict(name, model, domain, S, y, S_P, cfg, workers=1) -> tuple:
    """``(mean, sd, status)`` at ``S_P``."""
    n = len(y)
    if name == "exact":
        if n > cfg.dense_cap:
            return None, None, "skipped: cap"
        mean, var = oracle.exact_krige(model, S, y, S_P, cap=cfg.dense_cap)
    elif name == "local":
        mean, var = oracle.local_krige(model, S, y, S_P, k=min(cfg.local_k, n))
    elif name == "dl-exact":
        return None, None, "n/a: likelihood only"
    else:
        if name == "fsa-slow" and n > cfg.fsa_slow_cap:
            return None, None, "skipped: cap"
        design = design_for(name, n, cfg)
        tree = design.tree(domain, S, y, cfg.partition.strategy)
        post = upward_sweep(compute_prior(tree, model, workers))
        mean, var = predict(post, S_P, workers=workers).marginals()
    return mean, np.sqrt(var), "ok"


def holdout_split(S, y, fraction=0.0, gap=None, seed=0) -> tuple:
    """Boolean test mask: a random fraction and/or a 1-D gap interval."""
    test = np.zeros(len(y), dtype=bool)
    if fraction > 0:
        rng = np.random.default_rng(seed)
        test[rng.choice(len(y), size=int(round(fraction * len(y))), replace=False)] = True
    if gap is not None:
        test |= (S[:, 0] >= gap[0]) & (S[:, 0] <= gap[1])
    return test


def score_predictions(mean, sd, truth):
    return score(mean, sd, truth)


def fit_slope(ns, ts) -> float:
    """Least-squares slope of ``log t`` against ``log n``."""
    return float(np.polyfit(np.log(ns), np.log(ts), 1)[0])


def bench_mra(n: int, model: CovarianceModel, r: int = 30, J: int = 4, repeats: int = 1,
              seed: int = 0) -> dict:
    S = oracle.regular_grid(n).reshape(-1, 1)
    y = np.random.default_rng(seed).standard_normal(n)
    design = mra_design(n, r, J)
    dom = Domain.unit(1)
    times = [timed(mra_loglik, model, dom, S, y, design)[1] for _ in range(repeats)]
    mem = peak_memory(mra_loglik, model, dom, S, y, design)
    return {"n": n, "method": "mra", "M": len(design.branching), "seconds": min(times),
            "peak_bytes": mem}


def bench_dense(n: int, model: CovarianceModel, repeats: int = 1, seed: int = 0) -> dict:
    S = oracle.regular_grid(n).reshape(-1, 1)
    y = np.random.default_rng(seed).standard_normal(n)
    times = [timed(oracle.exact_loglik, model, S, y, cap=max(n, oracle.DENSE_CAP))[1]
             for _ in range(repeats)]
    mem = peak_memory(oracle.exact_loglik, model, S, y, cap=max(n, oracle.DENSE_CAP))
    return {"n": n, "method": "dense", "M": 0, "seconds": min(times), "peak_bytes": mem}
