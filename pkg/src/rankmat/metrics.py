"""Accuracy (MAE) and popularity-concentration (Matthew effect) metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import RatingDataset
from .models import EmbeddingModel, predict_rating
from .ranking import RankTable


class MetricError(ValueError):
    pass


@dataclass
class MetricReport:
    """Evaluation of one trained model.

    ``mae`` and ``matthew_degree`` are ``None`` when the run diverged.
    """

    mae: float | None
    matthew_degree: float | None
    top_n: int
    diverged: bool
    config_echo: dict = field(default_factory=dict)
    losses: list[float] = field(default_factory=list)

    @property
    def epochs_run(self) -> int:
        return len(self.losses)

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "matthew_degree": self.matthew_degree,
            "top_n": self.top_n,
            "diverged": self.diverged,
            "epochs_run": self.epochs_run,
            "config": self.config_echo,
            "losses": [x if math.isfinite(x) else None for x in self.losses],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)


@dataclass(frozen=True, eq=False)
class FreqDistribution:
    """Items with positive frequency, most frequent first (ties: lower index)."""

    item_index: np.ndarray
    frequency: np.ndarray

    @property
    def rank(self) -> np.ndarray:
        return np.arange(1, len(self.frequency) + 1)

    def __len__(self) -> int:
        return len(self.frequency)

    @classmethod
    def from_counts(cls, counts) -> FreqDistribution:
        counts = np.asarray(counts)
        idx = np.flatnonzero(counts > 0)
        freq = counts[idx]
        order = np.lexsort((idx, -freq))
        return cls(item_index=idx[order], frequency=freq[order])

    def dump(self, path) -> None:
        with open(Path(path), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["item_index", "frequency", "rank"])
            for i, f, r in zip(self.item_index.tolist(), self.frequency.tolist(), self.rank.tolist()):
                writer.writerow([i, f, r])


def predictions(model: EmbeddingModel, data: RatingDataset, ranks: RankTable, clamp) -> np.ndarray:
    return predict_rating(
        model.kind,
        model.dots(data.users, data.items),
        ranks.user_rank[data.users],
        ranks.item_rank[data.items],
        clamp,
    )


def mae(model: EmbeddingModel, test: RatingDataset, ranks: RankTable, clamp=None) -> float:
    if len(test) == 0:
        raise MetricError("MAE of an empty test set")
    model.check_dims(test)
    clamp = test.clamp if clamp is None else clamp
    return float(np.mean(np.abs(predictions(model, test, ranks, clamp) - test.ratings)))


def score_matrix(model: EmbeddingModel, ranks: RankTable, clamp) -> np.ndarray:
    """Predicted rating for every (user, item) cell."""
    dots = model.user_factors @ model.item_factors.T
    return predict_rating(
        model.kind, dots, ranks.user_rank[:, None], ranks.item_rank[None, :], clamp
    )


def top_n_recommend(
    model: EmbeddingModel, train: RatingDataset, ranks: RankTable, n: int = 10, clamp=None
) -> list[np.ndarray]:
    """Per user, the ``n`` best-scored items the user has not rated in ``train``.

    Ties go to the lower item index.
    """
    if n < 1:
        raise MetricError(f"n must be >= 1, got {n}")
    model.check_dims(train)
    clamp = train.clamp if clamp is None else clamp
    scores = score_matrix(model, ranks, clamp)
    scores[train.users, train.items] = -np.inf
    candidates = train.item_count - np.bincount(train.users, minlength=train.user_count)
    # stable sort of the negated scores keeps ascending item index within ties
    order = np.argsort(-scores, axis=1, kind="stable")[:, :n]
    return [order[u, : min(n, candidates[u])] for u in range(train.user_count)]


def recommendation_counts(lists, item_count: int) -> np.ndarray:
    flat = np.concatenate([np.asarray(x, dtype=np.int64) for x in lists]) if lists else np.empty(0, np.int64)
    return np.bincount(flat, minlength=item_count)


def zipf_slope(dist) -> float:
    """OLS slope of log(frequency) against log(rank), natural logs.

    Accepts a :class:`FreqDistribution` or a descending frequency sequence.
    """
    freq = dist.frequency if isinstance(dist, FreqDistribution) else dist
    y = np.log(np.asarray(freq, dtype=np.float64))
    if len(y) < 2:
        raise MetricError("zipf slope needs at least 2 ranks")
    x = np.log(np.arange(1, len(y) + 1, dtype=np.float64))
    xc = x - x.mean()
    yc = y - y.mean()
    return float(xc @ yc / (xc @ xc))


def degree_of_matthew_effect(
    model: EmbeddingModel, train: RatingDataset, ranks: RankTable, n: int = 10, clamp=None
) -> float:
    """Log-log slope of how often each item lands in a top-``n`` list.

    Closer to 0 means exposure is spread more evenly across items.
    """
    lists = top_n_recommend(model, train, ranks, n, clamp)
    dist = FreqDistribution.from_counts(recommendation_counts(lists, train.item_count))
    if len(dist) == 0:
        raise MetricError("no recommendations were produced")
    return zipf_slope(dist)


def evaluate(trace, train: RatingDataset, test: RatingDataset, ranks: RankTable, top_n: int = 10) -> MetricReport:
    """Metrics for a finished :class:`~rankmat.trainer.TrainTrace`."""
    if trace.diverged:
        return MetricReport(None, None, top_n, True, trace.config.to_dict(), list(trace.losses))
    model = trace.final_model
    return MetricReport(
        mae=mae(model, test, ranks, train.clamp),
        matthew_degree=degree_of_matthew_effect(model, train, ranks, top_n),
        top_n=top_n,
        diverged=False,
        config_echo=trace.config.to_dict(),
        losses=list(trace.losses),
    )
