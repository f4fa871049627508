"""Prediction scores."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigurationError

INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


@dataclass
class ScoreReport:
    rmspe: float
    crps_mean: float
    log_score: float
    count: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(a, b):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise ConfigurationError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ConfigurationError("need at least one prediction")
    return a, b


def rmspe(pred, actual) -> float:
    """Root mean-square prediction error."""
    pred, actual = _pair(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def crps_normal(mean, sd, actual):
    """CRPS of a normal predictive distribution; ``sd == 0`` gives ``|y - mu|``."""
    scalar = all(np.ndim(v) == 0 for v in (mean, sd, actual))
    mean, sd, actual = (np.atleast_1d(v) for v in
                        np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mean, sd, actual))))
    if np.any(sd < 0):
        raise ConfigurationError("predictive sd must be nonnegative")
    err = actual - mean
    out = np.abs(err)
    pos = sd > 0
    z = err[pos] / sd[pos]
    out[pos] = sd[pos] * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - INV_SQRT_PI)
    return float(out[0]) if scalar else out


def gaussian_log_score(mean, sd, actual) -> float:
    """Summed log predictive density of independent normal marginals."""
    mean, actual = _pair(mean, actual)
    sd = np.asarray(sd, dtype=float).reshape(-1)
    return float(np.sum(norm.logpdf(actual, mean, sd)))


def log_score(value: float, reference: float) -> dict:
    """Log-score relative to a reference log-likelihood."""
    value, reference = float(value), float(reference)
    return {"difference": value - reference,
            "ratio": value / reference if reference != 0 else math.nan}


def score(mean, sd, actual) -> ScoreReport:
    mean, actual = _pair(mean, actual)
    sd = np.asarray(sd, dtype=float).reshape(-1)
    return ScoreReport(
        rmspe=rmspe(mean, actual),
        crps_mean=float(np.mean(crps_normal(mean, sd, actual))),
        log_score=gaussian_log_score(mean, np.maximum(sd, 1e-300), actual),
        count=int(actual.size),
    )
