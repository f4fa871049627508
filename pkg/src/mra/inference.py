"""Posterior of the basis-function weights, log-likelihood and ML fitting.

The upward sweep passes one :class:`Summary` per region to its parent. A
summary stacks the blocks for all ancestor resolutions into one symmetric
matrix (``A_tilde``) and one vector (``omega_tilde``); block ``(k, l)`` lives
at ``[o[k]:o[k+1], o[l]:o[l+1]]`` with ``o = prior.offsets(path)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _linalg as la
from .covariance import CovarianceModel
from .errors import ConfigurationError, FactorizationError, MRAError
from .geometry import PartitionTree
from .prior import PriorFactors, compute_prior

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class Summary:
    """Message sent from a region to its parent."""

    path: tuple
    A_tilde: np.ndarray
    omega_tilde: np.ndarray
    d: float
    u: float

    @property
    def payload_blocks(self) -> int:
        """Number of stored ``r x r``-type blocks (lower triangle incl. diagonal)
        plus weight vectors."""
        m = len(self.path)
        return m * (m + 1) // 2 + m


@dataclass
class PosteriorFactors:
    prior: PriorFactors
    ktilde_chol: dict = field(default_factory=dict)
    A: dict = field(default_factory=dict)
    omega: dict = field(default_factory=dict)
    d: dict = field(default_factory=dict)
    u: dict = field(default_factory=dict)
    n: int = 0

    def A_block(self, path, k, l) -> np.ndarray:
        o = self.prior.offsets(path + (0,))
        return self.A[path][o[k]:o[k + 1], o[l]:o[l + 1]]

    @property
    def neg2loglik(self) -> float:
        return self.d[()] + self.u[()]

    @property
    def loglik(self) -> float:
        return -0.5 * (self.neg2loglik + self.n * LOG_2PI)


def leaf_values(tree: PartitionTree, y=None) -> dict:
    y = tree.values if y is None else np.asarray(y, dtype=float).reshape(-1)
    if y is None:
        raise ConfigurationError("no observed values: pass y or assign values to the tree")
    if y.size != tree.n:
        raise ConfigurationError(f"{y.size} values for {tree.n} locations")
    return {leaf: y[idx] for leaf, idx in tree.leaf_obs.items()}


def leaf_summaries(prior: PriorFactors, leaf, y_leaf) -> Summary:
    """Summaries of one leaf computed directly from its covariance."""
    L = prior.leaf_sigma_chol[leaf]
    B = prior.leaf_B[leaf]
    y_leaf = np.asarray(y_leaf, dtype=float).reshape(-1)
    Z = la.lsolve(L, np.column_stack([B, y_leaf]))
    ZB, zy = Z[:, :-1], Z[:, -1]
    return Summary(leaf, ZB.T @ ZB, ZB.T @ zy, la.logdet(L), float(zy @ zy))


def merge_and_update(children, path, prior: PriorFactors, post: PosteriorFactors | None = None) -> Summary:
    """Combine child messages at region ``path`` and emit its own message.

    Children are reduced in the order given; callers pass them sorted by
    child index so that the floating-point result is reproducible.
    """
    A = children[0].A_tilde.copy()
    omega = children[0].omega_tilde.copy()
    d_sum, u_sum = children[0].d, children[0].u
    for c in children[1:]:
        A += c.A_tilde
        omega += c.omega_tilde
        d_sum += c.d
        u_sum += c.u
    p = prior.offsets(path)[-1]
    Lk = prior.kinv_chol[path]
    prec = prior.kinv[path] + A[p:, p:]
    scale = float(np.mean(np.diag(prec))) if prec.size else 1.0
    Lt, _ = la.chol(prec, scale, "posterior precision", path)
    if Lt.shape[0] and not np.all(np.isfinite(Lt)):
        raise FactorizationError(f"posterior precision for region {path} is not finite", region=path)
    G = la.lsolve(Lt, A[p:, :p])
    g = la.lsolve(Lt, omega[p:])
    A_tilde = A[:p, :p] - G.T @ G
    omega_tilde = omega[:p] - G.T @ g
    d = la.logdet(Lt) - la.logdet(Lk) + d_sum
    u = -float(g @ g) + u_sum
    if post is not None:
        post.ktilde_chol[path] = Lt
        post.A[path] = A
        post.omega[path] = omega
        post.d[path] = d
        post.u[path] = u
    return Summary(path, A_tilde, omega_tilde, d, u)


def upward_sweep(prior: PriorFactors, y=None) -> PosteriorFactors:
    """Serial upward sweep: leaves first, then resolutions ``M-1, ..., 0``."""
    tree = prior.tree
    ys = leaf_values(tree, y)
    post = PosteriorFactors(prior, n=tree.n)
    messages = {}
    for leaf in tree.leaves:
        s = leaf_summaries(prior, leaf, ys[leaf])
        post.d[leaf], post.u[leaf] = s.d, s.u
        messages[leaf] = s
    for level in range(tree.depth - 1, -1, -1):
        for path in tree.paths_at(level):
            kids = [messages.pop(c) for c in tree.children(path)]
            messages[path] = merge_and_update(kids, path, prior, post)
    return post


def loglikelihood(tree: PartitionTree, model: CovarianceModel, y=None, workers: int = 1,
                  prior: PriorFactors | None = None) -> float:
    """M-RA Gaussian log-density of the observations, constants included."""
    if prior is None:
        prior = compute_prior(tree, model, workers=workers)
    if workers > 1:
        from .executor import run_upward
        post = run_upward(tree, prior, y, workers)
    else:
        post = upward_sweep(prior, y)
    return post.loglik


def posterior_weight_moments(post: PosteriorFactors, path) -> tuple:
    """Posterior mean and covariance of the weights of region ``path``."""
    Lt = post.ktilde_chol[path]
    r = Lt.shape[0]
    if r == 0:
        return np.zeros(0), np.zeros((0, 0))
    p = post.prior.offsets(path)[-1]
    mean = la.chol_solve(Lt, post.omega[path][p:])
    cov = la.chol_solve(Lt, np.eye(r))
    return mean, 0.5 * (cov + cov.T)


# -- maximum likelihood --------------------------------------------------

@dataclass
class FitResult:
    theta: np.ndarray
    loglik: float
    trace: list
    evaluations: list
    iterations: int
    converged: bool

    def trace_rows(self):
        """Rows ``(iteration, variance, range, nugget, loglik)``."""
        return [(i, *th, ll) for i, th, ll in self.trace]


def fit(tree: PartitionTree, y, family: str, init, fix_nugget: bool = False,
        max_iter: int = 500, ftol: float = 1e-6, workers: int = 1,
        loglik_fn=None, plugin=None) -> FitResult:
    """Maximise the log-likelihood with Nelder-Mead over log-parameters.

    ``init`` is ``(variance, range, nugget)``; with ``fix_nugget`` the nugget
    is held at its initial value (typically 0) and only two parameters move.
    ``loglik_fn(model) -> float`` replaces the M-RA likelihood when given.
    """
    init = np.asarray(init, dtype=float)
    free = 2 if fix_nugget else 3
    if np.any(init[:free] <= 0):
        raise ConfigurationError(f"initial parameters must be positive, got {init}")
    y = None if y is None else np.asarray(y, dtype=float)
    base = CovarianceModel(family, *init, plugin=plugin)

    def theta_of(x):
        th = init.copy()
        th[:free] = np.exp(x)
        return th

    def evaluate(th):
        model = base.with_theta(th)
        if loglik_fn is not None:
            return loglik_fn(model)
        return loglikelihood(tree, model, y, workers=workers)

    evaluations = []
    cache = {}

    def objective(x):
        key = tuple(x)
        if key not in cache:
            th = theta_of(x)
            try:
                ll = evaluate(th)
            except (MRAError, np.linalg.LinAlgError, FloatingPointError) as exc:
                log.debug("rejecting theta=%s: %s", th, exc)
                ll = -np.inf
            if not np.isfinite(ll):
                ll = -np.inf
            evaluations.append((th, ll))
            cache[key] = ll
        ll = cache[key]
        return np.inf if not np.isfinite(ll) else -ll

    x0 = np.log(init[:free])
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise MRAError(f"log-likelihood is not finite at the initial parameters {init}")
    trace = [(0, theta_of(x0), -f0)]

    def callback(xk, *_):
        trace.append((len(trace), theta_of(xk), -objective(xk)))

    res = minimize(objective, x0, method="Nelder-Mead", callback=callback,
                   options={"maxiter": max_iter, "fatol": ftol, "xatol": np.inf,
                            "adaptive": False})
    best = theta_of(res.x)
    return FitResult(best, -float(res.fun), trace, evaluations, int(res.nit), bool(res.success))
