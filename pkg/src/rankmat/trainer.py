"""Seeded initialization, plain SGD training and the learning-rate sweep."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dataset import RatingDataset
from .metrics import evaluate
from .models import EmbeddingModel, ModelKind, loss, targets_for
from .ranking import RankTable

log = logging.getLogger(__name__)

DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class TrainConfig:
    kind: ModelKind = ModelKind.VANILLA
    k: int = 10
    learning_rate: float = 0.01
    epochs: int = 100
    seed: int = 42
    init_scale: float = 0.1
    shuffle_each_epoch: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.init_scale > 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")

    def replace(self, **changes) -> TrainConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(eq=False)
class TrainTrace:
    losses: list[float]
    diverged: bool
    final_model: EmbeddingModel
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def epochs_run(self) -> int:
        return len(self.losses)


def init_embeddings(m: int, n: int, k: int, seed: int, scale: float, kind=ModelKind.VANILLA):
    """Uniform ``[0, scale)`` factors from a generator seeded by ``seed``."""
    if min(m, n, k) < 1:
        raise ValueError("m, n and k must all be >= 1")
    rng = np.random.default_rng(seed)
    users = rng.random((m, k)) * scale
    items = rng.random((n, k)) * scale
    return EmbeddingModel(users, items, kind=kind, seed=seed)


@njit(cache=True, nogil=True)
def _sgd_epoch(U, V, users, items, targets, order, lr):
    k = U.shape[1]
    u_old = np.empty(k)
    for idx in order:
        i = users[idx]
        j = items[idx]
        dot = 0.0
        for f in range(k):
            dot += U[i, f] * V[j, f]
        e = dot - targets[idx]
        for f in range(k):
            u_old[f] = U[i, f]
        for f in range(k):
            U[i, f] -= lr * 2.0 * e * V[j, f]
            V[j, f] -= lr * 2.0 * e * u_old[f]


def shuffle_rng(seed: int) -> np.random.Generator:
    # separate stream from init_embeddings, which consumes default_rng(seed)
    return np.random.default_rng([seed, 1])


def train(config: TrainConfig, train: RatingDataset, ranks: RankTable) -> TrainTrace:
    """Run ``config.epochs`` passes of per-triplet SGD.

    Each step moves ``u_i`` and ``v_j`` against the gradient of
    ``(u_i . v_j - target)**2``, both computed from the pre-step pair.
    Training stops early once the loss is non-finite, exceeds
    :data:`DIVERGENCE_CAP`, or any factor turns non-finite.
    """
    if not config.learning_rate > 0:
        raise ValueError("learning_rate must be positive")
    if len(ranks.user_rank) != train.user_count or len(ranks.item_rank) != train.item_count:
        raise ValueError("rank table does not match training data dimensions")

    model = init_embeddings(
        train.user_count, train.item_count, config.k, config.seed, config.init_scale, config.kind
    )
    model.config = config.to_dict()
    targets = targets_for(config.kind, train, ranks)
    users = np.ascontiguousarray(train.users, dtype=np.int64)
    items = np.ascontiguousarray(train.items, dtype=np.int64)
    rng = shuffle_rng(config.seed)
    order = rng.permutation(len(train))

    losses: list[float] = []
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            if config.shuffle_each_epoch and epoch > 0:
                order = rng.permutation(len(train))
            _sgd_epoch(
                model.user_factors, model.item_factors, users, items, targets, order,
                float(config.learning_rate),
            )
            value = loss(model, train, ranks)
            losses.append(value)
            if not math.isfinite(value) or value > DIVERGENCE_CAP or not model.is_finite():
                diverged = True
                log.info("%s lr=%g diverged at epoch %d", config.kind.value, config.learning_rate, epoch)
                break
    return TrainTrace(losses=losses, diverged=diverged, final_model=model, config=config)


def grid_search(
    base: TrainConfig,
    learning_rates,
    train_data: RatingDataset,
    test_data: RatingDataset,
    ranks: RankTable,
    top_n: int = 10,
):
    """Train and evaluate one model per learning rate.

    Returns ``[(rate, MetricReport), ...]`` in input order.
    """
    rates = [float(r) for r in learning_rates]
    if not rates:
        raise ValueError("learning rate grid is empty")
    if any(not r > 0 for r in rates):
        raise ValueError("learning rates must be strictly positive")
    results = []
    for rate in rates:
        trace = train(base.replace(learning_rate=rate), train_data, ranks)
        results.append((rate, evaluate(trace, train_data, test_data, ranks, top_n=top_n)))
    return results


def default_grid() -> list[float]:
    return np.geomspace(1e-4, 5e-2, 8).tolist()
