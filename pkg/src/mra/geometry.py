"""Recursive domain partitioning, location bucketing and knot placement.

Region paths are tuples of 0-based child indices; the empty tuple is the
root. A tree of depth ``M`` has ``len(branching) == M`` and its leaves sit at
resolution ``M``.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

Path = tuple


@dataclass(frozen=True)
class Domain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ConfigurationError("domain bounds must be equal-length vectors")
        if not np.all(lower < upper):
            raise ConfigurationError(f"need lower < upper, got {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def unit(cls, dim: int = 1) -> "Domain":
        return cls(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class Region:
    path: Path
    lower: np.ndarray
    upper: np.ndarray

    @property
    def level(self) -> int:
        return len(self.path)

    def contains(self, points: np.ndarray, upper_closed: np.ndarray) -> np.ndarray:
        """Membership under the half-open rule; ``upper_closed`` marks axes on
        which this box touches the domain's upper face."""
        points = np.atleast_2d(points)
        below = points < self.upper
        at_top = (points == self.upper) & upper_closed
        return np.all((points >= self.lower) & (below | at_top), axis=1)


@dataclass(frozen=True)
class KnotStrategy:
    """How non-leaf knots are placed.

    ``r`` is either a single count used at every non-leaf resolution or one
    count per resolution ``0..M-1``. ``user`` maps region paths to explicit
    knot arrays for the ``user-supplied`` variant.
    """

    variant: str = "equidistant-interior"
    r: int | Sequence[int] = 2
    user: dict | None = None

    VARIANTS = ("equidistant-interior", "child-boundaries", "user-supplied")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ConfigurationError(f"unknown knot strategy {self.variant!r}")

    def count(self, level: int) -> int:
        if np.ndim(self.r) == 0:
            return int(self.r)
        counts = list(self.r)
        if level >= len(counts):
            raise ConfigurationError(f"no knot count given for resolution {level}")
        return int(counts[level])


@dataclass(frozen=True)
class PartitionTree:
    domain: Domain
    branching: tuple
    regions: dict
    knots: dict = field(default_factory=dict)
    leaf_obs: dict = field(default_factory=dict)
    locations: np.ndarray | None = None
    values: np.ndarray | None = None

    @property
    def depth(self) -> int:
        return len(self.branching)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def n(self) -> int:
        return 0 if self.locations is None else len(self.locations)

    def children(self, path: Path) -> list:
        if len(path) >= self.depth:
            return []
        return [path + (j,) for j in range(self.branching[len(path)])]

    def paths_at(self, level: int) -> list:
        if level == 0:
            return [()]
        return [tuple(p) for p in itertools.product(*(range(J) for J in self.branching[:level]))]

    @property
    def leaves(self) -> list:
        return self.paths_at(self.depth)

    def ancestors(self, path: Path) -> list:
        """Chain from the root down to and including ``path``."""
        return [path[:l] for l in range(len(path) + 1)]

    def knots_of(self, path: Path) -> np.ndarray:
        if len(path) == self.depth:
            idx = self.leaf_obs.get(path, np.empty(0, dtype=int))
            if self.locations is None:
                return np.empty((0, self.dim))
            return self.locations[idx]
        return self.knots.get(path, np.empty((0, self.dim)))

    def knot_counts(self) -> list:
        """Knot count per non-leaf resolution (max over regions)."""
        return [max((len(self.knots_of(p)) for p in self.paths_at(m)), default=0)
                for m in range(self.depth)]

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Leaf index (row-major over child indices) for each point."""
        return locate_leaves(self, points)

    def leaf_path(self, flat: int) -> Path:
        return tuple(int(i) for i in np.unravel_index(flat, self.branching)) if self.depth else ()

    def upper_closed(self, region: Region) -> np.ndarray:
        return region.upper == self.domain.upper


def _split_axis(level: int, dim: int) -> int:
    return level % dim


def _child_edges(lower: float, upper: float, J: int) -> np.ndarray:
    edges = lower + (upper - lower) * np.arange(J + 1) / J
    edges[-1] = upper
    return edges


def build_partition(domain: Domain, branching: Sequence[int]) -> PartitionTree:
    """Equal-measure recursive partition; level ``m`` splits axis ``m mod d``."""
    branching = tuple(int(J) for J in branching)
    if len(branching) == 0:
        # a zero-depth tree is the exact (0-RA) model; callers opt in explicitly
        raise ConfigurationError("branching sequence is empty")
    if any(J < 1 for J in branching):
        raise ConfigurationError(f"branching factors must be positive, got {branching}")
    return _build(domain, branching)


def build_flat(domain: Domain) -> PartitionTree:
    """Depth-zero tree: the root is the only leaf."""
    return _build(domain, ())


def _build(domain: Domain, branching: tuple) -> PartitionTree:
    regions = {(): Region((), domain.lower.copy(), domain.upper.copy())}
    frontier = [()]
    for level, J in enumerate(branching):
        axis = _split_axis(level, domain.dim)
        nxt = []
        for path in frontier:
            parent = regions[path]
            edges = _child_edges(parent.lower[axis], parent.upper[axis], J)
            for j in range(J):
                lo, hi = parent.lower.copy(), parent.upper.copy()
                lo[axis], hi[axis] = edges[j], edges[j + 1]
                child = path + (j,)
                regions[child] = Region(child, lo, hi)
                nxt.append(child)
        frontier = nxt
    return PartitionTree(domain, branching, regions)


def _as_points(locations, dim: int) -> np.ndarray:
    pts = np.asarray(locations, dtype=float)
    if pts.size == 0:
        return np.empty((0, dim))
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise DomainError(f"locations have dimension {pts.shape[1]}, domain has {dim}")
    return pts


def locate_leaves(tree: PartitionTree, points) -> np.ndarray:
    pts = _as_points(points, tree.dim)
    lo, hi = tree.domain.lower, tree.domain.upper
    outside = np.any((pts < lo) | (pts > hi) | ~np.isfinite(pts), axis=1)
    if np.any(outside):
        bad = int(np.flatnonzero(outside)[0])
        raise DomainError(f"location {bad} ({pts[bad]}) lies outside the domain", index=bad)
    # descend level by level; all boxes at a level share the split axis
    cell_lo = np.tile(lo, (len(pts), 1))
    cell_hi = np.tile(hi, (len(pts), 1))
    flat = np.zeros(len(pts), dtype=np.int64)
    for level, J in enumerate(tree.branching):
        axis = _split_axis(level, tree.dim)
        a, b = cell_lo[:, axis], cell_hi[:, axis]
        width = (b - a) / J
        j = np.floor((pts[:, axis] - a) / width).astype(np.int64)
        j = np.clip(j, 0, J - 1)
        # correct floating-point slips against the exact edge formula
        edge_lo = a + (b - a) * j / J
        edge_hi = np.where(j == J - 1, b, a + (b - a) * (j + 1) / J)
        j = np.where(pts[:, axis] < edge_lo, j - 1, j)
        j = np.where((pts[:, axis] >= edge_hi) & (j < J - 1), j + 1, j)
        new_lo = a + (b - a) * j / J
        new_hi = np.where(j == J - 1, b, a + (b - a) * (j + 1) / J)
        cell_lo[:, axis], cell_hi[:, axis] = new_lo, new_hi
        flat = flat * J + j
    return flat


def assign_locations(tree: PartitionTree, locations, values=None) -> PartitionTree:
    """Bucket observation locations into leaves.

    Leaf knots are the leaf's observation locations, so assignment also
    fixes the resolution-``M`` knots.
    """
    pts = _as_points(locations, tree.dim)
    vals = None
    if values is not None:
        vals = np.asarray(values, dtype=float).reshape(-1)
        if vals.size != len(pts):
            raise ConfigurationError(f"{vals.size} values for {len(pts)} locations")
    flat = locate_leaves(tree, pts)
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=int(np.prod(tree.branching, dtype=np.int64)) if tree.depth else 1)
    starts = np.concatenate([[0], np.cumsum(counts)])
    leaf_obs = {}
    for k, leaf in enumerate(tree.leaves):
        leaf_obs[leaf] = order[starts[k]:starts[k + 1]]
    return dataclasses.replace(tree, leaf_obs=leaf_obs, locations=pts, values=vals)


def _lattice_shape(r: int, dim: int) -> list:
    """Most balanced factorisation of ``r`` into ``dim`` axis counts."""
    shape = []
    remaining = r
    for k in range(dim, 0, -1):
        target = remaining ** (1.0 / k)
        best = 1
        for c in range(1, remaining + 1):
            if remaining % c == 0 and abs(c - target) < abs(best - target):
                best = c
        shape.append(best)
        remaining //= best
    return shape


def equidistant_knots(lower: np.ndarray, upper: np.ndarray, r: int) -> np.ndarray:
    """Lattice knots at fractions ``(i + 0.5) / r_k`` of each axis."""
    if r == 0:
        return np.empty((0, lower.size))
    shape = _lattice_shape(r, lower.size)
    axes = [lower[k] + (upper[k] - lower[k]) * (np.arange(c) + 0.5) / c
            for k, c in enumerate(shape)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grid])


def place_knots(tree: PartitionTree, strategy: KnotStrategy) -> PartitionTree:
    knots = {}
    for level in range(tree.depth):
        r = strategy.count(level)
        if r < 0:
            raise ConfigurationError("knot counts must be nonnegative")
        if r == 0 and level > 0:
            raise ConfigurationError(f"r=0 is only allowed at resolution 0 (got level {level})")
        for path in tree.paths_at(level):
            region = tree.regions[path]
            if strategy.variant == "equidistant-interior":
                q = equidistant_knots(region.lower, region.upper, r)
            elif strategy.variant == "child-boundaries":
                if tree.dim > 1:
                    raise ConfigurationError("child-boundaries knots are only supported in 1-D")
                J = tree.branching[level]
                if r != J - 1:
                    raise ConfigurationError(f"child-boundaries needs r = J - 1 = {J - 1}, got {r}")
                edges = _child_edges(region.lower[0], region.upper[0], J)
                q = edges[1:-1].reshape(-1, 1)
            else:
                if not strategy.user or path not in strategy.user:
                    raise ConfigurationError(f"no user knots supplied for region {path}")
                q = _as_points(strategy.user[path], tree.dim)
                inside = region.contains(q, tree.upper_closed(region))
                if not np.all(inside):
                    raise DomainError(f"user knot outside region {path}")
            knots[path] = q
    return dataclasses.replace(tree, knots=knots)


def make_tree(domain: Domain, branching: Sequence[int], strategy: KnotStrategy,
              locations=None, values=None) -> PartitionTree:
    """Convenience wrapper: partition, bucket observations, place knots."""
    tree = build_partition(domain, branching) if len(branching) else build_flat(domain)
    tree = assign_locations(tree, np.empty((0, domain.dim)) if locations is None else locations, values)
    return place_knots(tree, strategy)


def mra_depth(n: int, r: int, J: int) -> int:
    """``log_J(n / r)`` rounded to the nearest integer."""
    return max(0, int(round(math.log(n / r, J))))
