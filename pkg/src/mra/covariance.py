"""Parametric covariance functions."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigurationError, DomainError

SQRT3 = np.sqrt(3.0)


def _check_lags(h):
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise DomainError("correlation lag must be nonnegative")
    return h


def exponential(h, scale: float = 1.0):
    """Exponential correlation ``exp(-h)``, times ``scale``."""
    h = _check_lags(h)
    out = np.exp(-h)
    if scale != 1.0:
        out *= scale
    return out


def matern15(h, scale: float = 1.0):
    """Matern correlation with smoothness 1.5: ``(1 + sqrt(3) h) exp(-sqrt(3) h)``,
    times ``scale``."""
    h = _check_lags(h)
    t = SQRT3 * h
    out = np.exp(-t)
    t += 1.0
    if scale != 1.0:
        t *= scale
    out *= t
    return out


CORRELATIONS = {"exponential": exponential, "matern15": matern15}


@dataclass(frozen=True)
class CovarianceModel:
    """``variance * rho(dist / range)`` plus an optional nugget.

    With ``family="plugin"`` the callable ``plugin(A, B, variance, range)``
    must return the cross-covariance matrix (nugget excluded); it is used
    as-is everywhere a covariance block is needed.
    """

    family: str = "matern15"
    variance: float = 1.0
    range: float = 1.0
    nugget: float = 0.0
    plugin: Callable | None = None

    def __post_init__(self):
        if self.family not in ("exponential", "matern15", "plugin"):
            raise ConfigurationError(f"unknown covariance family {self.family!r}")
        if self.family == "plugin" and self.plugin is None:
            raise ConfigurationError("plugin family needs a kernel callable")
        if not self.variance > 0 or not self.range > 0:
            raise ConfigurationError("variance and range must be positive")
        if not self.nugget >= 0:
            raise ConfigurationError("nugget must be nonnegative")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.variance, self.range, self.nugget])

    def with_theta(self, theta) -> "CovarianceModel":
        v, k, e = (float(t) for t in theta)
        return dataclasses.replace(self, variance=v, range=k, nugget=e)

    def correlation(self, h):
        return CORRELATIONS[self.family](h)

    def _scaled(self, dist):
        """``variance * rho(dist / range)``; overwrites ``dist``."""
        dist *= 1.0 / self.range
        return CORRELATIONS[self.family](dist, self.variance)

    def cross(self, A, B) -> np.ndarray:
        """Covariance between two point sets, never including the nugget."""
        A, B = as_points(A), as_points(B)
        if A.shape[1] != B.shape[1]:
            raise ConfigurationError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        if self.family == "plugin":
            return np.asarray(self.plugin(A, B, self.variance, self.range), dtype=float)
        if A.shape[1] == 1:
            dist = np.subtract.outer(A[:, 0], B[:, 0])
            np.abs(dist, out=dist)
        else:
            dist = cdist(A, B)
        return self._scaled(dist)

    def acvf(self, lags) -> np.ndarray:
        """Autocovariance at the given lags; the nugget sits at lag 0."""
        lags = np.asarray(lags, dtype=float)
        out = self.variance * self.correlation(np.abs(lags) / self.range)
        return out + self.nugget * (lags == 0)


def as_points(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        return A.reshape(1, 1)
    if A.ndim == 1:
        return A.reshape(-1, 1)
    return A


def cov_matrix(model: CovarianceModel, A, B=None, add_nugget: bool = False) -> np.ndarray:
    """Covariance matrix between ``A`` and ``B`` (``B`` defaults to ``A``).

    The nugget goes on the diagonal only when ``add_nugget`` is set and both
    arguments are the same ordered point list.
    """
    same = B is None or B is A
    B = A if B is None else B
    C = model.cross(A, B)
    if add_nugget and model.nugget > 0:
        if not same:
            A_, B_ = as_points(A), as_points(B)
            same = A_.shape == B_.shape and np.array_equal(A_, B_)
        if same:
            C[np.diag_indices_from(C)] += model.nugget
    return C
