"""Prior M-RA quantities: knot precision blocks, leaf basis matrices and
leaf covariances, plus pointwise evaluation of the approximate covariance.

Basis matrices are kept in two forms. ``W`` blocks are the raw
``v_l(X, Q_l)`` values. Their whitened counterparts ``W L_l^{-T}`` (with
``L_l`` the Cholesky factor of ``K_l^{-1}``) turn every ``b' K b`` product
into a plain inner product, which is how the recursion is evaluated.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from ._pool import ordered_map
from .covariance import CovarianceModel, as_points
from .errors import OracleCapError
from .geometry import PartitionTree

ORACLE_CAP = 2000


@dataclass
class PriorFactors:
    tree: PartitionTree
    model: CovarianceModel
    kinv: dict = field(default_factory=dict)
    kinv_chol: dict = field(default_factory=dict)
    whitened: dict = field(default_factory=dict)
    leaf_B: dict = field(default_factory=dict)
    leaf_sigma: dict = field(default_factory=dict)
    leaf_sigma_chol: dict = field(default_factory=dict)
    jitter: dict = field(default_factory=dict)

    def offsets(self, path) -> np.ndarray:
        """Column offsets of the per-level blocks in stacked basis matrices
        for the strict ancestors of ``path``."""
        counts = [self.kinv_chol[path[:l]].shape[0] for l in range(len(path))]
        return np.concatenate([[0], np.cumsum(counts, dtype=int)]).astype(int)

    def leaf_B_blocks(self, leaf) -> list:
        o = self.offsets(leaf)
        B = self.leaf_B[leaf]
        return [B[:, o[l]:o[l + 1]] for l in range(len(o) - 1)]

    def K(self, path) -> np.ndarray:
        L = self.kinv_chol[path]
        return la.chol_solve(L, np.eye(L.shape[0]))


def chain_basis(prior: PriorFactors, path, X) -> tuple:
    """Raw and whitened basis matrices of ``X`` for the strict ancestors of
    ``path``; ``X`` must lie inside region ``path``."""
    X = as_points(X)
    model, tree = prior.model, prior.tree
    o = prior.offsets(path)
    W = np.empty((len(X), o[-1]))
    What = np.empty((len(X), o[-1]))
    for l in range(len(path)):
        anc = path[:l]
        lo, hi = o[l], o[l + 1]
        if hi == lo:
            continue
        block = model.cross(X, tree.knots_of(anc))
        if lo:
            block -= What[:, :lo] @ prior.whitened[anc][:, :lo].T
        W[:, lo:hi] = block
        What[:, lo:hi] = la.lsolve(prior.kinv_chol[anc], block.T).T
    return W, What


def _remainder(model, X, What) -> np.ndarray:
    V = model.cross(X, X) - What @ What.T
    return 0.5 * (V + V.T)


def compute_prior(tree: PartitionTree, model: CovarianceModel, workers: int = 1) -> PriorFactors:
    """Run the W-recursion over the whole tree, one resolution at a time."""
    prior = PriorFactors(tree, model)
    scale = model.variance

    def non_leaf(path):
        Q = tree.knots_of(path)
        _, What = chain_basis(prior, path, Q)
        kinv = _remainder(model, Q, What)
        L, jit = la.chol(kinv, scale, "K^-1 block", path)
        if jit:
            kinv = kinv + jit * np.eye(len(Q))
        return path, What, kinv, L, jit

    def leaf(path):
        S = tree.knots_of(path)
        W, What = chain_basis(prior, path, S)
        sigma = _remainder(model, S, What)
        if model.nugget:
            sigma[np.diag_indices_from(sigma)] += model.nugget
        L, jit = la.chol(sigma, scale, "leaf covariance", path)
        if jit:
            sigma = sigma + jit * np.eye(len(S))
        return path, W, sigma, L, jit

    for level in range(tree.depth):
        for path, What, kinv, L, jit in ordered_map(non_leaf, tree.paths_at(level), workers):
            prior.whitened[path] = What
            prior.kinv[path] = kinv
            prior.kinv_chol[path] = L
            if jit:
                prior.jitter[path] = jit
    for path, W, sigma, L, jit in ordered_map(leaf, tree.leaves, workers):
        prior.leaf_B[path] = W
        prior.leaf_sigma[path] = sigma
        prior.leaf_sigma_chol[path] = L
        if jit:
            prior.jitter[path] = jit
    return prior


def basis_at(prior: PriorFactors, X) -> tuple:
    """Whitened basis of arbitrary points.

    Returns ``(flat_leaf_index, What)`` where row ``i`` of ``What`` holds the
    whitened basis functions of all ancestors of point ``i``'s leaf.
    """
    tree = prior.tree
    X = as_points(X)
    flat = tree.locate(X)
    width = prior.offsets(tree.leaves[0])[-1] if tree.depth else 0
    out = np.zeros((len(X), width))
    for k in np.unique(flat):
        rows = np.flatnonzero(flat == k)
        leaf = tree.leaf_path(int(k))
        _, What = chain_basis(prior, leaf, X[rows])
        out[rows, :What.shape[1]] = What
    return flat, out


def _common_level(tree: PartitionTree, flat_a, flat_b) -> np.ndarray:
    """Deepest resolution at which leaves ``flat_a`` and ``flat_b`` share a region."""
    fa = np.asarray(flat_a, dtype=np.int64)
    fb = np.asarray(flat_b, dtype=np.int64)
    level = np.zeros(np.broadcast(fa, fb).shape, dtype=int)
    same = np.ones_like(level, dtype=bool)
    stride = int(np.prod(tree.branching, dtype=np.int64)) if tree.depth else 1
    for m, J in enumerate(tree.branching):
        stride //= J
        same &= (fa // stride) == (fb // stride)
        level += same
    return level


def mra_covariance(prior: PriorFactors, s1, s2) -> float:
    """Approximate covariance between two single locations."""
    tree, model = prior.tree, prior.model
    s1 = as_points(np.atleast_1d(s1)).reshape(1, -1)
    s2 = as_points(np.atleast_1d(s2)).reshape(1, -1)
    (f1,), W1 = basis_at(prior, s1)
    (f2,), W2 = basis_at(prior, s2)
    c = int(_common_level(tree, f1, f2))
    if c == tree.depth:
        value = float(model.cross(s1, s2)[0, 0])
        if np.array_equal(s1, s2):
            value += model.nugget
        return value
    o = prior.offsets(tree.leaves[0])
    return float(W1[0, :o[c + 1]] @ W2[0, :o[c + 1]])


def dense_mra_cov_matrix(prior: PriorFactors, S, cap: int = ORACLE_CAP,
                         add_nugget: bool = True) -> np.ndarray:
    """Approximate covariance matrix of ``S`` assembled pair by pair.

    Test oracle only: quadratic memory, refuses more than ``cap`` points.
    """
    tree, model = prior.tree, prior.model
    S = as_points(S)
    if len(S) > cap:
        raise OracleCapError(f"{len(S)} points exceeds the dense oracle cap of {cap}")
    flat, What = basis_at(prior, S)
    common = _common_level(tree, flat[:, None], flat[None, :])
    o = prior.offsets(tree.leaves[0]) if tree.depth else np.array([0])
    C = np.zeros((len(S), len(S)))
    for l in range(tree.depth):
        Wl = What[:, o[l]:o[l + 1]]
        C += np.where(common >= l, Wl @ Wl.T, 0.0)
    same_leaf = common == tree.depth
    C[same_leaf] = model.cross(S, S)[same_leaf]
    if add_nugget and model.nugget:
        C[np.diag_indices_from(C)] += model.nugget
    return 0.5 * (C + C.T)


# -- binary dump ---------------------------------------------------------
#
# Layout (all little-endian):
#   magic   8 bytes  b"MRAPRIOR"
#   version uint32   currently 1
#   hlen    uint32   length of the UTF-8 JSON header that follows
#   header  JSON     {"theta": [...], "family": str, "branching": [...],
#                     "arrays": [[key, kind, path, rows, cols], ...]}
#   payload float64  arrays concatenated row-major in header order

MAGIC = b"MRAPRIOR"
VERSION = 1
_KINDS = ("kinv", "kinv_chol", "whitened", "leaf_B", "leaf_sigma", "leaf_sigma_chol")


def dump_prior(prior: PriorFactors, fh) -> None:
    entries, blobs = [], []
    for kind in _KINDS:
        for path, arr in getattr(prior, kind).items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            entries.append([kind, list(path), arr.shape[0], arr.shape[1]])
            blobs.append(arr.tobytes())
    header = json.dumps({
        "theta": prior.model.theta.tolist(),
        "family": prior.model.family,
        "branching": list(prior.tree.branching),
        "arrays": entries,
    }).encode()
    fh.write(MAGIC + struct.pack("<II", VERSION, len(header)) + header)
    for blob in blobs:
        fh.write(blob)


def load_prior(fh, tree: PartitionTree, model: CovarianceModel) -> PriorFactors:
    """Restore factors written by :func:`dump_prior` for a matching tree/model."""
    if fh.read(8) != MAGIC:
        raise ValueError("not an M-RA prior dump")
    version, hlen = struct.unpack("<II", fh.read(8))
    if version != VERSION:
        raise ValueError(f"unsupported prior dump version {version}")
    header = json.loads(fh.read(hlen))
    if tuple(header["branching"]) != tree.branching:
        raise ValueError("dump was written for a different partition")
    if not np.allclose(header["theta"], model.theta, rtol=0, atol=0):
        raise ValueError("dump was written for different covariance parameters")
    prior = PriorFactors(tree, model)
    for kind, path, rows, cols in header["arrays"]:
        buf = fh.read(8 * rows * cols)
        arr = np.frombuffer(buf, dtype="<f8").reshape(rows, cols).astype(float)
        getattr(prior, kind)[tuple(path)] = arr
    return prior
