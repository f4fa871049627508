import numpy as np
from scipy.linalg import solve_triangular

from .errors import FactorizationError

JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def chol(A, scale=1.0, what="matrix", region=None):
    """Lower Cholesky factor, retrying with diagonal jitter ``f * scale``.

    Returns ``(L, jitter)`` where ``jitter`` is the amount actually added.
    """
    n = A.shape[0]
    if n == 0:
        return np.empty((0, 0)), 0.0
    for f in JITTER_LADDER:
        jitter = f * scale
        try:
            M = A if jitter == 0 else A + jitter * np.eye(n)
            return np.linalg.cholesky(M), jitter
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"{what} for region {region} is not positive definite after jitter "
        f"{JITTER_LADDER[-1] * scale:g}", region=region)


def lsolve(L, B):
    """``L^{-1} B`` for lower-triangular ``L``."""
    if L.shape[0] == 0 or B.size == 0:
        return np.zeros((L.shape[0],) + B.shape[1:])
    return solve_triangular(L, B, lower=True, check_finite=False)


def ltsolve(L, B):
    """``L^{-T} B``."""
    if L.shape[0] == 0 or B.size == 0:
        return np.zeros((L.shape[0],) + B.shape[1:])
    return solve_triangular(L, B, lower=True, trans="T", check_finite=False)


def chol_solve(L, B):
    """``(L L')^{-1} B``."""
    return ltsolve(L, lsolve(L, B))


def logdet(L) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L)))) if L.shape[0] else 0.0
