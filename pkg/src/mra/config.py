"""JSON experiment configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .covariance import CovarianceModel
from .errors import ConfigurationError
from .geometry import Domain, KnotStrategy

COMPETITORS = ("exact", "dl-exact", "mra", "fsa-fast", "fsa-slow", "block", "local")


@dataclass
class ModelSpec:
    family: str = "matern15"
    variance: float = 0.95
    range: float = 0.05
    nugget: float = 0.05

    def build(self) -> CovarianceModel:
        return CovarianceModel(self.family, self.variance, self.range, self.nugget)


@dataclass
class PartitionSpec:
    lower: list = field(default_factory=lambda: [0.0])
    upper: list = field(default_factory=lambda: [1.0])
    branching: list | None = None
    strategy: str = "equidistant-interior"
    r: int | list = 30
    J: int = 4

    @property
    def domain(self) -> Domain:
        return Domain(np.array(self.lower, float), np.array(self.upper, float))

    @property
    def knots(self) -> KnotStrategy:
        return KnotStrategy(self.strategy, self.r)


@dataclass
class DataSpec:
    csv: str | None = None
    n: int = 1024
    method: str = "circulant"
    seed: int = 0


@dataclass
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    partition: PartitionSpec = field(default_factory=PartitionSpec)
    data: DataSpec = field(default_factory=DataSpec)
    competitors: list = field(default_factory=lambda: ["exact", "mra"])
    n_ladder: list = field(default_factory=list)
    dense_ladder: list = field(default_factory=list)
    subset: str = "fixed"
    seeds: list = field(default_factory=lambda: [0])
    holdout_fraction: float = 0.0
    holdout_gap: list | None = None
    fsa_fast_r: int = 240
    fsa_slow_J: int = 64
    block_size: int = 240
    local_k: int = 20
    dense_cap: int = 4096
    dl_cap: int = 100_000
    mra_cap: int = 1_000_000
    fsa_slow_cap: int = 32768
    out: str = "out"

    def __post_init__(self):
        for name in self.competitors:
            if name not in COMPETITORS:
                raise ConfigurationError(f"unknown competitor {name!r}")
        if self.subset not in ("fixed", "increasing"):
            raise ConfigurationError("subset must be 'fixed' or 'increasing'")
        if self.n_ladder and list(self.n_ladder) != sorted(self.n_ladder):
            raise ConfigurationError("n_ladder must be ascending")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        model = ModelSpec(**raw.pop("model", {}))
        partition = dict(raw.pop("partition", {}))
        dom = partition.pop("domain", None)
        if dom:
            partition.setdefault("lower", dom["lower"])
            partition.setdefault("upper", dom["upper"])
        knots = partition.pop("knots", None)
        if knots:
            partition.setdefault("strategy", knots.get("strategy", "equidistant-interior"))
            partition.setdefault("r", knots.get("r", 30))
        data = DataSpec(**raw.pop("data", {}))
        try:
            return cls(model=model, partition=PartitionSpec(**partition), data=data, **raw)
        except TypeError as exc:
            raise ConfigurationError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
