"""Popularity ranks for users and items."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .dataset import RatingDataset


class RankBasis(str, Enum):
    RATING_SUM = "sum"
    RATING_COUNT = "count"


@dataclass(frozen=True, eq=False)
class RankTable:
    """1-based popularity ranks; rank 1 is the most popular entity."""

    user_rank: np.ndarray
    item_rank: np.ndarray
    user_score: np.ndarray
    item_score: np.ndarray
    basis: RankBasis


def rank_scores(scores: np.ndarray, present: np.ndarray | None = None) -> np.ndarray:
    """Unique 1-based ranks by descending score, ties to the lower index.

    Entities flagged absent in ``present`` sort after every present one.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if present is None:
        present = np.ones(len(scores), dtype=bool)
    idx = np.arange(len(scores))
    # lexsort: last key is primary
    order = np.lexsort((idx, -scores, ~present))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def compute_ranks(train: RatingDataset, basis: RankBasis = RankBasis.RATING_SUM) -> RankTable:
    if len(train) == 0:
        raise ValueError("cannot rank an empty training set")
    basis = RankBasis(basis)
    weights = train.ratings if basis is RankBasis.RATING_SUM else None
    user_score = np.bincount(train.users, weights=weights, minlength=train.user_count)
    item_score = np.bincount(train.items, weights=weights, minlength=train.item_count)
    user_seen = np.bincount(train.users, minlength=train.user_count) > 0
    item_seen = np.bincount(train.items, minlength=train.item_count) > 0
    return RankTable(
        user_rank=rank_scores(user_score, user_seen),
        item_rank=rank_scores(item_score, item_seen),
        user_score=user_score.astype(np.float64),
        item_score=item_score.astype(np.float64),
        basis=basis,
    )


def dump_ranks(ranks: RankTable, path) -> None:
    """Write ``entity_type,dense_index,score,rank`` rows, users first."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["entity_type", "dense_index", "score", "rank"])
        for kind, scores, rank in (
            ("user", ranks.user_score, ranks.user_rank),
            ("item", ranks.item_score, ranks.item_rank),
        ):
            for i in range(len(rank)):
                writer.writerow([kind, i, repr(float(scores[i])), int(rank[i])])
