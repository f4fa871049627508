"""Exact reference computations used for validation and as baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _linalg as la
from .covariance import CovarianceModel, as_points, cov_matrix
from .errors import ConfigurationError, FactorizationError, OracleCapError

DENSE_CAP = 4096
DL_CAP = 100_000
LOG_2PI = math.log(2.0 * math.pi)


def regular_grid(n: int, lower: float = 0.0, upper: float = 1.0) -> np.ndarray:
    """Cell-centred equidistant grid of ``n`` points on ``[lower, upper]``."""
    return lower + (upper - lower) * (np.arange(n) + 0.5) / n


@dataclass
class DenseGP:
    """Exact GP conditioned on observations at ``locations``."""

    model: CovarianceModel
    locations: np.ndarray
    chol: np.ndarray

    @classmethod
    def build(cls, model: CovarianceModel, S, cap: int = DENSE_CAP) -> "DenseGP":
        S = as_points(S)
        if len(S) > cap:
            raise OracleCapError(f"dense GP with n={len(S)} exceeds cap {cap}")
        C = cov_matrix(model, S, add_nugget=True)
        try:
            L = np.linalg.cholesky(C) if len(S) else np.empty((0, 0))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError("dense covariance is not positive definite") from exc
        return cls(model, S, L)

    def loglik(self, y) -> float:
        y = np.asarray(y, dtype=float).reshape(-1)
        z = la.lsolve(self.chol, y)
        return -0.5 * (la.logdet(self.chol) + float(z @ z) + len(y) * LOG_2PI)

    def krige(self, y, S_P) -> tuple:
        y = np.asarray(y, dtype=float).reshape(-1)
        S_P = as_points(S_P)
        prior_var = np.diag(self.model.cross(S_P, S_P)) if self.model.family == "plugin" \
            else np.full(len(S_P), self.model.variance)
        if len(self.locations) == 0:
            return np.zeros(len(S_P)), prior_var
        Z = la.lsolve(self.chol, self.model.cross(self.locations, S_P))
        mean = Z.T @ la.lsolve(self.chol, y)
        var = prior_var - np.sum(Z ** 2, axis=0)
        return mean, np.maximum(var, 0.0)


def exact_loglik(model: CovarianceModel, S, y, cap: int = DENSE_CAP) -> float:
    """Exact Gaussian log-density of ``y`` at ``S`` (2*pi constant included)."""
    return DenseGP.build(model, S, cap).loglik(y)


def exact_krige(model: CovarianceModel, S, y, S_P, cap: int = DENSE_CAP) -> tuple:
    """Kriging means and variances of the noise-free process at ``S_P``."""
    return DenseGP.build(model, S, cap).krige(y, S_P)


def durbin_levinson_loglik(acvf, y, cap: int = DL_CAP) -> float:
    """Exact log-density of a stationary series via the Durbin-Levinson
    innovations recursion (O(n^2) time, O(n) memory)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if n > cap:
        raise OracleCapError(f"Durbin-Levinson with n={n} exceeds cap {cap}")
    g = np.asarray(acvf, dtype=float).reshape(-1)
    if g.size < n:
        raise ConfigurationError(f"need {n} autocovariance lags, got {g.size}")
    if n == 0:
        return 0.0
    v = g[0]
    if not v > 0:
        raise ConfigurationError("autocovariance at lag 0 must be positive")
    phi = np.zeros(n)
    total = math.log(v) + y[0] ** 2 / v
    for t in range(1, n):
        prev = phi[:t - 1]
        # phi_{t,t} from the order-(t-1) coefficients
        k = (g[t] - prev @ g[t - 1:0:-1]) / v
        phi[:t - 1] = prev - k * prev[::-1]
        phi[t - 1] = k
        v *= 1.0 - k * k
        if not v > 0:
            raise ConfigurationError(f"innovation variance became {v:g} at step {t}; invalid acvf")
        e = y[t] - phi[:t] @ y[t - 1::-1]
        total += math.log(v) + e * e / v
    return -0.5 * (total + n * LOG_2PI)


def circulant_eigenvalues(model: CovarianceModel, n: int, spacing: float,
                          max_factor: int = 4) -> np.ndarray:
    """Nonnegative eigenvalues of the smallest adequate circulant embedding.

    The embedding length starts at ``2(n-1)`` and doubles up to
    ``max_factor`` times that size.
    """
    base = max(2 * (n - 1), 1)
    size = base
    while size <= max_factor * base:
        half = size // 2
        lags = np.arange(half + 1) * spacing
        c = model.variance * model.correlation(lags / model.range) if model.family != "plugin" \
            else model.cross(np.zeros((1, 1)), lags.reshape(-1, 1))[0]
        row = np.concatenate([c, c[-2:0:-1]])
        lam = np.fft.fft(row).real
        if lam.min() >= -1e-10 * lam.max():
            return np.clip(lam, 0.0, None)
        size *= 2
    raise FactorizationError(
        f"circulant embedding stays indefinite up to {max_factor}x padding; "
        "use a larger padding factor")


def simulate_1d_circulant(model: CovarianceModel, n: int, seed=None, spacing: float | None = None,
                          replicates: int | None = None, max_factor: int = 4) -> np.ndarray:
    """Exact stationary draw(s) on a regular 1-D grid (Davies-Harte).

    ``spacing`` defaults to ``1/n`` (the :func:`regular_grid` spacing). The
    nugget is added as independent normal noise. With ``replicates`` the
    result has shape ``(replicates, n)``.
    """
    spacing = 1.0 / n if spacing is None else spacing
    rng = np.random.default_rng(seed)
    lam = circulant_eigenvalues(model, n, spacing, max_factor)
    m = lam.size
    count = 1 if replicates is None else replicates
    out = np.empty((count, n))
    for i in range(count):
        w = np.sqrt(lam / m) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
        out[i] = np.fft.fft(w).real[:n]
    if model.nugget:
        out += math.sqrt(model.nugget) * rng.standard_normal(out.shape)
    return out[0] if replicates is None else out


def simulate_dense(model: CovarianceModel, S, seed=None, cap: int = DENSE_CAP,
                   replicates: int | None = None) -> np.ndarray:
    """Exact draw at arbitrary locations via a Cholesky factor."""
    S = as_points(S)
    if len(S) > cap:
        raise OracleCapError(f"dense simulation with n={len(S)} exceeds cap {cap}")
    rng = np.random.default_rng(seed)
    C = model.cross(S, S)
    L, _ = la.chol(0.5 * (C + C.T), model.variance, "simulation covariance")
    count = 1 if replicates is None else replicates
    out = (L @ rng.standard_normal((len(S), count))).T
    if model.nugget:
        out += math.sqrt(model.nugget) * rng.standard_normal(out.shape)
    return out[0] if replicates is None else out


def local_krige(model: CovarianceModel, S, y, S_P, k: int = 20) -> tuple:
    """Kriging at each prediction location from its ``k`` nearest observations."""
    S, S_P = as_points(S), as_points(S_P)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(S) == 0:
        return np.zeros(len(S_P)), np.full(len(S_P), model.variance)
    if not 1 <= k <= len(S):
        raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={len(S)}")
    _, idx = cKDTree(S).query(S_P, k=k)
    idx = np.asarray(idx).reshape(len(S_P), k)
    mean = np.empty(len(S_P))
    var = np.empty(len(S_P))
    if model.family == "plugin":
        for i, nb in enumerate(idx):
            mean[i], var[i] = (a[0] for a in exact_krige(model, S[nb], y[nb], S_P[i:i + 1]))
        return mean, var
    Sn = S[idx]
    D = np.sqrt(np.sum((Sn[:, :, None, :] - Sn[:, None, :, :]) ** 2, axis=-1))
    C = model.variance * model.correlation(D / model.range) + model.nugget * np.eye(k)
    dp = np.sqrt(np.sum((Sn - S_P[:, None, :]) ** 2, axis=-1))
    c = model.variance * model.correlation(dp / model.range)
    w = np.linalg.solve(C, c[:, :, None])[:, :, 0]
    mean = np.sum(w * y[idx], axis=1)
    var = model.variance - np.sum(w * c, axis=1)
    return mean, np.maximum(var, 0.0)
