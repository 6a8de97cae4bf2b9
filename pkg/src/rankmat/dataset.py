"""Rating triplet storage, MovieLens CSV ingestion and per-user train/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised for unreadable or malformed rating files."""


class RatingFormat(str, Enum):
    MOVIELENS_CSV = "movielens_csv"


@dataclass(frozen=True, eq=False)
class RatingDataset:
    """Sparse user-item ratings with dense 0-based indices.

    ``users``, ``items`` and ``ratings`` are parallel arrays, one entry per
    observed (user, item, rating) triplet.
    """

    user_count: int
    item_count: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    rating_min: float
    rating_max: float
    user_id_map: dict[str, int] = field(repr=False)
    item_id_map: dict[str, int] = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("users", "items", "ratings"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.ratings)

    @property
    def triplets(self) -> list[tuple[int, int, float]]:
        return list(zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()))

    @property
    def clamp(self) -> tuple[float, float]:
        return (self.rating_min, self.rating_max)

    def subset(self, mask: np.ndarray) -> RatingDataset:
        """Rows selected by ``mask``, keeping counts, id maps and rating range."""
        return RatingDataset(
            user_count=self.user_count,
            item_count=self.item_count,
            users=self.users[mask],
            items=self.items[mask],
            ratings=self.ratings[mask],
            rating_min=self.rating_min,
            rating_max=self.rating_max,
            user_id_map=self.user_id_map,
            item_id_map=self.item_id_map,
        )

    def validate(self) -> None:
        if self.user_count < 1 or self.item_count < 1:
            raise DatasetError("dataset needs at least one user and one item")
        if not (len(self.users) == len(self.items) == len(self.ratings)):
            raise DatasetError("triplet arrays have different lengths")
        if len(self.users) and (
            self.users.min() < 0
            or self.items.min() < 0
            or self.users.max() >= self.user_count
            or self.items.max() >= self.item_count
        ):
            raise DatasetError("index out of range")
        keys = self.users.astype(np.int64) * self.item_count + self.items
        if len(np.unique(keys)) != len(keys):
            raise DatasetError("duplicate (user, item) pair")
        if len(self.ratings) and (
            self.ratings.min() < self.rating_min or self.ratings.max() > self.rating_max
        ):
            raise DatasetError("rating outside [rating_min, rating_max]")
        if sorted(self.user_id_map.values()) != list(range(self.user_count)):
            raise DatasetError("user id map is not a bijection onto [0, user_count)")
        if sorted(self.item_id_map.values()) != list(range(self.item_count)):
            raise DatasetError("item id map is not a bijection onto [0, item_count)")


@dataclass(frozen=True)
class SplitPair:
    train: RatingDataset
    test: RatingDataset
    seed: int
    ratio: float


def from_triplets(
    triplets, user_count: int | None = None, item_count: int | None = None
) -> RatingDataset:
    """Build a dataset from in-memory (user_index, item_index, rating) tuples.

    Identity id maps are generated; counts default to ``max index + 1``.
    """
    arr = list(triplets)
    if not arr:
        raise DatasetError("empty dataset")
    users = np.array([t[0] for t in arr], dtype=np.int64)
    items = np.array([t[1] for t in arr], dtype=np.int64)
    ratings = np.array([t[2] for t in arr], dtype=np.float64)
    m = int(users.max()) + 1 if user_count is None else user_count
    n = int(items.max()) + 1 if item_count is None else item_count
    ds = RatingDataset(
        user_count=m,
        item_count=n,
        users=users,
        items=items,
        ratings=ratings,
        rating_min=float(ratings.min()),
        rating_max=float(ratings.max()),
        user_id_map={str(i): i for i in range(m)},
        item_id_map={str(j): j for j in range(n)},
    )
    ds.validate()
    return ds


def load_ratings(path, format: RatingFormat = RatingFormat.MOVIELENS_CSV) -> RatingDataset:
    """Read a MovieLens ``userId,movieId,rating,timestamp`` file.

    Users and items are densely reindexed in order of first appearance; the
    timestamp column is ignored. Blank lines are skipped. Errors name the
    offending 1-based line number.
    """
    if RatingFormat(format) is not RatingFormat.MOVIELENS_CSV:
        raise DatasetError(f"unsupported format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ratings file not found: {path}")

    user_map: dict[str, int] = {}
    item_map: dict[str, int] = {}
    users: list[int] = []
    items: list[int] = []
    ratings: list[float] = []
    seen: set[tuple[int, int]] = set()

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header_seen = False
        for row in reader:
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if not header_seen:
                header_seen = True
                continue
            if len(row) != 4:
                raise DatasetError(f"line {lineno}: expected 4 columns, got {len(row)}")
            uid, iid, raw = row[0].strip(), row[1].strip(), row[2].strip()
            try:
                rating = float(raw)
            except ValueError:
                raise DatasetError(f"line {lineno}: non-numeric rating {raw!r}") from None
            if not math.isfinite(rating):
                raise DatasetError(f"line {lineno}: non-finite rating {raw!r}")
            u = user_map.setdefault(uid, len(user_map))
            i = item_map.setdefault(iid, len(item_map))
            if (u, i) in seen:
                raise DatasetError(f"line {lineno}: duplicate rating for user {uid}, item {iid}")
            seen.add((u, i))
            users.append(u)
            items.append(i)
            ratings.append(rating)

    if not ratings:
        raise DatasetError(f"{path}: no ratings found")

    r = np.asarray(ratings, dtype=np.float64)
    return RatingDataset(
        user_count=len(user_map),
        item_count=len(item_map),
        users=np.asarray(users, dtype=np.int64),
        items=np.asarray(items, dtype=np.int64),
        ratings=r,
        rating_min=float(r.min()),
        rating_max=float(r.max()),
        user_id_map=user_map,
        item_id_map=item_map,
    )


def train_count(count: int, ratio: float) -> int:
    # the rounding guard keeps ceil(0.7 * 10) at 7 despite 7.000000000000001
    return min(count, math.ceil(round(ratio * count, 9)))


def split(dataset: RatingDataset, ratio: float = 0.8, seed: int = 42) -> SplitPair:
    """Per-user shuffled split.

    Each user's triplets are permuted by a generator seeded with
    ``(seed, user_index)``; the first ``ceil(ratio * count)`` go to train and
    the remainder to test. Both halves keep the source row order.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    if len(dataset) == 0:
        raise DatasetError("cannot split an empty dataset")

    in_train = np.zeros(len(dataset), dtype=bool)
    order = np.argsort(dataset.users, kind="stable")
    bounds = np.searchsorted(dataset.users[order], np.arange(dataset.user_count + 1))
    for u in range(dataset.user_count):
        rows = order[bounds[u] : bounds[u + 1]]
        if len(rows) == 0:
            continue
        rng = np.random.default_rng([seed, u])
        shuffled = rows[rng.permutation(len(rows))]
        in_train[shuffled[: train_count(len(rows), ratio)]] = True

    return SplitPair(
        train=dataset.subset(in_train),
        test=dataset.subset(~in_train),
        seed=seed,
        ratio=ratio,
    )
