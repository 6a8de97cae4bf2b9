"""Regression targets, squared-error loss and inverse transforms for the three factorization models.

All three models fit a plain dot product ``u_i . v_j`` to a per-rating target:

* ``VANILLA``  - the rating itself;
* ``GLOVEMAT`` - ``log(r + 1)``;
* ``RANKMAT``  - ``log(r + 1) / (log(rank_u + 1) + log(rank_i + 1))``, which
  damps the target of popular users and items.

No bias terms, no weighting, no regularization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .dataset import RatingDataset

# exp() arguments are capped here before inverting log targets
EXP_CAP = 50.0


class ModelKind(str, Enum):
    VANILLA = "vanilla"
    GLOVEMAT = "glovemat"
    RANKMAT = "rankmat"


def rank_denominator(user_rank, item_rank):
    return np.log1p(np.asarray(user_rank, dtype=np.float64)) + np.log1p(
        np.asarray(item_rank, dtype=np.float64)
    )


def target(kind: ModelKind, rating, user_rank=1, item_rank=1):
    """Value the dot product is regressed onto. Broadcasts over arrays."""
    kind = ModelKind(kind)
    rating = np.asarray(rating, dtype=np.float64)
    if kind is ModelKind.VANILLA:
        out = rating
    elif kind is ModelKind.GLOVEMAT:
        out = np.log1p(rating)
    else:
        out = np.log1p(rating) / rank_denominator(user_rank, item_rank)
    return out[()] if out.ndim == 0 else out


def predict_rating(kind: ModelKind, dot, user_rank=1, item_rank=1, clamp=(0.5, 5.0)):
    """Map a dot product back onto the rating scale and clamp it.

    Inverse of :func:`target`. Broadcasts over arrays.
    """
    kind = ModelKind(kind)
    lo, hi = clamp
    if not lo < hi:
        raise ValueError(f"invalid clamp range {clamp}")
    dot = np.asarray(dot, dtype=np.float64)
    if kind is ModelKind.VANILLA:
        out = dot
    elif kind is ModelKind.GLOVEMAT:
        out = np.expm1(np.minimum(dot, EXP_CAP))
    else:
        out = np.expm1(np.minimum(dot * rank_denominator(user_rank, item_rank), EXP_CAP))
    out = np.clip(out, lo, hi)
    return out[()] if out.ndim == 0 else out


def grad_pair(u, v, t):
    """Gradient of ``(u . v - t)**2`` with respect to ``u`` and ``v``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    e = float(u @ v) - t
    return 2.0 * e * v, 2.0 * e * u


@dataclass(eq=False)
class EmbeddingModel:
    user_factors: np.ndarray
    item_factors: np.ndarray
    kind: ModelKind
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.kind = ModelKind(self.kind)
        if self.user_factors.ndim != 2 or self.item_factors.ndim != 2:
            raise ValueError("factor matrices must be 2-D")
        if self.user_factors.shape[1] != self.item_factors.shape[1]:
            raise ValueError("user and item factors disagree on k")

    @property
    def k(self) -> int:
        return self.user_factors.shape[1]

    def check_dims(self, data: RatingDataset) -> None:
        if (
            self.user_factors.shape[0] != data.user_count
            or self.item_factors.shape[0] != data.item_count
        ):
            raise ValueError(
                f"model is {self.user_factors.shape[0]}x{self.item_factors.shape[0]}, "
                f"data is {data.user_count}x{data.item_count}"
            )

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.user_factors).all() and np.isfinite(self.item_factors).all())

    def dots(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        return np.einsum("ij,ij->i", self.user_factors[users], self.item_factors[items])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "user_factors": self.user_factors.tolist(),
            "item_factors": self.item_factors.tolist(),
            "seed": self.seed,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EmbeddingModel:
        model = cls(
            user_factors=np.asarray(d["user_factors"], dtype=np.float64).reshape(-1, d["k"]),
            item_factors=np.asarray(d["item_factors"], dtype=np.float64).reshape(-1, d["k"]),
            kind=ModelKind(d["kind"]),
            seed=d.get("seed"),
            config=d.get("config", {}),
        )
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> EmbeddingModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def targets_for(kind: ModelKind, data: RatingDataset, ranks) -> np.ndarray:
    return np.asarray(
        target(kind, data.ratings, ranks.user_rank[data.users], ranks.item_rank[data.items]),
        dtype=np.float64,
    )


def loss(model: EmbeddingModel, data: RatingDataset, ranks) -> float:
    """Sum of squared residuals over the observed triplets of ``data``."""
    model.check_dims(data)
    resid = model.dots(data.users, data.items) - targets_for(model.kind, data, ranks)
    return float(resid @ resid)
