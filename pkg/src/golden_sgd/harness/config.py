from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from ..errors import DomainError

DEFAULT_ETAS = [0.0001, 0.001, 0.01, 0.016, 0.1, 0.2]
DEFAULT_MOMENTA = [0.0, 0.2, 0.4, 0.6, 0.8, 0.825, 0.85, 0.874, 0.9, 0.925]
DEFAULT_FRACTIONS = [1.0, 0.75, 0.5, 0.25]
PROPOSED = (0.016, 0.874)


@dataclass
class ExperimentConfig:
    """Grid-search settings. Defaults give the 6x10 grid at desk scale.

    ``optimizer`` may be ``"sgd"``, ``"adam"`` or a list of both; for Adam the
    momentum axis is beta1.
    """

    optimizer: str | list = "sgd"
    eta_list: list = field(default_factory=lambda: list(DEFAULT_ETAS))
    momentum_list: list = field(default_factory=lambda: list(DEFAULT_MOMENTA))
    fractions: list = field(default_factory=lambda: list(DEFAULT_FRACTIONS))
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    epochs: int = 10
    batch_size: int = 64
    master_seed: int = 0
    data_source: str = "auto"
    data_dir: str | None = None
    n_train: int = 2000
    n_val: int = 500
    n_test: int = 1000
    noise_levels: list = field(default_factory=lambda: [0, 5, 10])
    noise_seed: int = 0
    hidden: int = 128
    dropout: float = 0.25

    def __post_init__(self):
        for opt in self.optimizers:
            if opt not in ("sgd", "adam"):
                raise DomainError(f"unknown optimizer {opt!r}")
        for name in ("eta_list", "momentum_list", "fractions", "seeds"):
            if not getattr(self, name):
                raise DomainError(f"{name} must be non-empty")
        if len(set(self.seeds)) != len(self.seeds) or min(self.seeds) < 0:
            raise DomainError("seeds must be distinct non-negative integers")
        if any(not 0 < f <= 1 for f in self.fractions):
            raise DomainError("fractions must lie in (0, 1]")
        if self.epochs < 1 or self.batch_size < 1:
            raise DomainError("epochs and batch_size must be positive")

    @property
    def optimizers(self):
        opt = self.optimizer
        return [opt] if isinstance(opt, str) else list(opt)

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def data_key(self):
        return (self.data_source, self.data_dir, self.n_train, self.n_val, self.n_test, self.master_seed)


@dataclass(frozen=True)
class Cell:
    optimizer: str
    eta: float
    momentum: float
    fraction: float
    eta_index: int = 0
    momentum_index: int = 0
    fraction_index: int = 0


def iter_cells(config):
    """Cells in merge order: optimizer, fraction, eta, momentum."""
    for opt in config.optimizers:
        for fi, frac in enumerate(config.fractions):
            for ei, eta in enumerate(config.eta_list):
                for mi, mom in enumerate(config.momentum_list):
                    yield Cell(opt, eta, mom, frac, ei, mi, fi)
