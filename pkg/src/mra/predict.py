"""Joint posterior prediction.

The predictive distribution has the same layout as the prior process: per
leaf, posterior basis matrices ``B~^{m+1,m}`` act on independent posterior
weights of the ancestors, plus an independent leaf residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .covariance import as_points
from .errors import MRAError
from .inference import PosteriorFactors, leaf_values
from .prior import PriorFactors, chain_basis


@dataclass
class LeafPredPrior:
    index: np.ndarray
    U: np.ndarray      # stacked v_l(S^P, Q_l), l < M
    L: np.ndarray      # v_M(S^P, S_leaf)
    VP: np.ndarray     # v_M(S^P, S^P)


@dataclass
class LeafPrediction:
    index: np.ndarray
    Bt: list           # Bt[m] = B~^{m+1,m}
    res_mean: np.ndarray
    res_cov: np.ndarray


@dataclass
class PredictiveDistribution:
    post: PosteriorFactors
    locations: np.ndarray
    leaves: dict = field(default_factory=dict)
    weight_mean: dict = field(default_factory=dict)

    @property
    def tree(self):
        return self.post.prior.tree

    def _whiten(self, leaf, m, Bt):
        """``L~^{-1} B~'`` for ancestor resolution ``m``."""
        return la.lsolve(self.post.ktilde_chol[leaf[:m]], Bt.T)

    def marginals(self, add_nugget: bool = False) -> tuple:
        """Posterior predictive means and variances in input order."""
        n = len(self.locations)
        mean, var = np.zeros(n), np.zeros(n)
        for leaf, lp in self.leaves.items():
            mu = lp.res_mean.copy()
            v = np.diag(lp.res_cov).copy()
            for m, Bt in enumerate(lp.Bt):
                anc = leaf[:m]
                if Bt.shape[1] == 0:
                    continue
                mu += Bt @ self.weight_mean[anc]
                v += np.sum(self._whiten(leaf, m, Bt) ** 2, axis=0)
            mean[lp.index], var[lp.index] = mu, v
        if add_nugget:
            var += self.post.prior.model.nugget
        return mean, np.maximum(var, 0.0)

    def covariance(self, add_nugget: bool = False) -> np.ndarray:
        """Dense joint predictive covariance (small problems only)."""
        n = len(self.locations)
        C = np.zeros((n, n))
        white = {}
        for leaf, lp in self.leaves.items():
            C[np.ix_(lp.index, lp.index)] += lp.res_cov
            for m, Bt in enumerate(lp.Bt):
                white[leaf, m] = self._whiten(leaf, m, Bt)
        items = list(self.leaves.items())
        for a, (la_, lpa) in enumerate(items):
            for lb_, lpb in items[a:]:
                shared = 0
                while shared < len(la_) and la_[shared] == lb_[shared]:
                    shared += 1
                block = np.zeros((len(lpa.index), len(lpb.index)))
                for m in range(min(shared + 1, len(lpa.Bt))):
                    block += white[la_, m].T @ white[lb_, m]
                C[np.ix_(lpa.index, lpb.index)] += block
                if lb_ != la_:
                    C[np.ix_(lpb.index, lpa.index)] += block.T
        if add_nugget:
            C[np.diag_indices_from(C)] += self.post.prior.model.nugget
        return 0.5 * (C + C.T)

    def sample(self, count: int, seed=None) -> np.ndarray:
        """``count`` joint draws, shape ``(count, n_pred)``."""
        if count < 1:
            raise ValueError("count must be at least 1")
        rng = np.random.default_rng(seed)
        tree = self.tree
        eta = {}
        for level in range(tree.depth):
            for path in tree.paths_at(level):
                Lt = self.post.ktilde_chol[path]
                z = rng.standard_normal((Lt.shape[0], count))
                eta[path] = self.weight_mean[path][:, None] + la.ltsolve(Lt, z)
        out = np.zeros((count, len(self.locations)))
        scale = self.post.prior.model.variance
        for leaf in tree.leaves:
            lp = self.leaves.get(leaf)
            if lp is None:
                continue
            R, _ = la.chol(lp.res_cov, scale, "predictive residual covariance", leaf)
            z = rng.standard_normal((len(lp.index), count))
            draw = lp.res_mean[:, None] + R @ z
            for m, Bt in enumerate(lp.Bt):
                if Bt.shape[1]:
                    draw += Bt @ eta[leaf[:m]]
            out[:, lp.index] = draw.T
        return out


def _whitened_leaf_basis(prior: PriorFactors, leaf) -> np.ndarray:
    o = prior.offsets(leaf)
    B = prior.leaf_B[leaf]
    out = np.empty_like(B)
    for l in range(len(o) - 1):
        out[:, o[l]:o[l + 1]] = la.lsolve(prior.kinv_chol[leaf[:l]], B[:, o[l]:o[l + 1]].T).T
    return out


def compute_pred_prior(prior: PriorFactors, S_P) -> dict:
    """Prior prediction blocks for every leaf holding prediction locations."""
    tree, model = prior.tree, prior.model
    S_P = as_points(S_P)
    flat = tree.locate(S_P)
    out = {}
    for k in np.unique(flat):
        leaf = tree.leaf_path(int(k))
        idx = np.flatnonzero(flat == k)
        X = S_P[idx]
        U, What = chain_basis(prior, leaf, X)
        S = tree.knots_of(leaf)
        L = model.cross(X, S) - What @ _whitened_leaf_basis(prior, leaf).T
        VP = model.cross(X, X) - What @ What.T
        out[leaf] = LeafPredPrior(idx, U, L, 0.5 * (VP + VP.T))
    return out


def weight_means(post: PosteriorFactors) -> dict:
    out = {}
    for path, Lt in post.ktilde_chol.items():
        p = post.prior.offsets(path)[-1]
        out[path] = la.chol_solve(Lt, post.omega[path][p:])
    return out


def ktilde_A(post: PosteriorFactors) -> dict:
    """``K~ A^{m,k}`` for ``k < m`` at every non-leaf region, stacked over k."""
    out = {}
    for path, Lt in post.ktilde_chol.items():
        p = post.prior.offsets(path)[-1]
        out[path] = la.chol_solve(Lt, post.A[path][p:, :p])
    return out


def predict_leaf(post: PosteriorFactors, leaf, pp: LeafPredPrior, y_leaf, KA: dict) -> LeafPrediction:
    """Downward basis sweep for one leaf."""
    prior = post.prior
    Ls = prior.leaf_sigma_chol[leaf]
    B = prior.leaf_B[leaf]
    rhs = la.chol_solve(Ls, np.column_stack([B, y_leaf, pp.L.T]))
    nb = B.shape[1]
    SinvB, Sinvy, SinvLt = rhs[:, :nb], rhs[:, nb], rhs[:, nb + 1:]
    X = pp.U - pp.L @ SinvB
    o = prior.offsets(leaf)
    Bt = [None] * (len(o) - 1)
    for l in range(len(o) - 2, -1, -1):
        Y = X[:, o[l]:o[l + 1]]
        Bt[l] = Y.copy()
        if l > 0 and Y.shape[1]:
            anc = leaf[:l]
            if anc not in KA:
                raise MRAError(f"missing posterior blocks for region {anc}")
            X[:, :o[l]] -= Y @ KA[anc]
    res_mean = pp.L @ Sinvy
    res_cov = pp.VP - pp.L @ SinvLt
    return LeafPrediction(pp.index, Bt, res_mean, 0.5 * (res_cov + res_cov.T))


def posterior_basis_sweep(post: PosteriorFactors, pred_prior: dict, S_P, y=None,
                          workers: int = 1, trace=None) -> PredictiveDistribution:
    tree = post.prior.tree
    ys = leaf_values(tree, y)
    KA = ktilde_A(post)
    dist = PredictiveDistribution(post, as_points(S_P), weight_mean=weight_means(post))
    if workers > 1 or trace is not None:
        from .executor import run_downward
        dist.leaves = run_downward(post, pred_prior, ys, KA, workers, trace)
    else:
        for leaf, pp in pred_prior.items():
            dist.leaves[leaf] = predict_leaf(post, leaf, pp, ys[leaf], KA)
    return dist


def predict(post: PosteriorFactors, S_P, y=None, workers: int = 1,
            trace=None) -> PredictiveDistribution:
    """Predictive distribution at ``S_P`` given a completed upward sweep."""
    pp = compute_pred_prior(post.prior, S_P)
    return posterior_basis_sweep(post, pp, S_P, y, workers, trace)


def predict_marginals(dist: PredictiveDistribution, add_nugget: bool = False) -> tuple:
    return dist.marginals(add_nugget)


def sample_predictive(dist: PredictiveDistribution, count: int, seed=None) -> np.ndarray:
    return dist.sample(count, seed)
