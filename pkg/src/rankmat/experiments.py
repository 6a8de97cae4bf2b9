"""Three-way model comparison over a learning-rate grid, written out as plot-ready files."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import load_ratings, split
from .models import ModelKind
from .ranking import RankBasis, compute_ranks
from .trainer import TrainConfig, default_grid, grid_search

log = logging.getLogger(__name__)

KINDS = (ModelKind.VANILLA, ModelKind.GLOVEMAT, ModelKind.RANKMAT)


@dataclass(frozen=True)
class ComparisonRow:
    learning_rate: float
    kind: ModelKind
    mae: float | None
    matthew_degree: float | None
    diverged: bool
    epochs_run: int


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    fingerprint: dict
    config: dict = field(default_factory=dict)

    def rates(self) -> list[float]:
        return sorted({r.learning_rate for r in self.rows})

    def cell(self, rate: float, kind: ModelKind) -> ComparisonRow:
        for row in self.rows:
            if row.learning_rate == rate and row.kind is ModelKind(kind):
                return row
        raise KeyError((rate, kind))

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "config": self.config,
            "rows": [
                {
                    "learning_rate": r.learning_rate,
                    "kind": r.kind.value,
                    "mae": r.mae,
                    "matthew_degree": r.matthew_degree,
                    "diverged": r.diverged,
                    "epochs_run": r.epochs_run,
                }
                for r in self.rows
            ],
        }


def run_comparison(
    data_path,
    overrides: dict | None = None,
    grid=None,
    *,
    ratio: float = 0.8,
    basis: RankBasis = RankBasis.RATING_SUM,
    top_n: int = 10,
) -> ComparisonTable:
    """Train every model kind at every learning rate on one shared split.

    The split, the rank table and the initialization seed are identical for
    all runs, so differences between kinds come from the objective alone.
    """
    grid = default_grid() if grid is None else [float(r) for r in grid]
    if not grid:
        raise ValueError("empty learning-rate grid")
    if len(set(grid)) != len(grid):
        raise ValueError("duplicate learning rates in grid")
    base = TrainConfig(**(overrides or {}))

    data = load_ratings(data_path)
    pair = split(data, ratio=ratio, seed=base.seed)
    ranks = compute_ranks(pair.train, basis)
    log.info(
        "loaded %s: %d users, %d items, %d ratings (%d train / %d test)",
        data_path, data.user_count, data.item_count, len(data), len(pair.train), len(pair.test),
    )

    rows = []
    for kind in KINDS:
        results = grid_search(base.replace(kind=kind), grid, pair.train, pair.test, ranks, top_n=top_n)
        for rate, report in results:
            log.info("%-8s lr=%.3g mae=%s matthew=%s", kind.value, rate, report.mae, report.matthew_degree)
            rows.append(
                ComparisonRow(rate, kind, report.mae, report.matthew_degree, report.diverged, report.epochs_run)
            )

    fingerprint = {
        "path": str(data_path),
        "user_count": data.user_count,
        "item_count": data.item_count,
        "triplet_count": len(data),
        "split_seed": pair.seed,
        "split_ratio": pair.ratio,
    }
    config = base.to_dict()
    del config["kind"], config["learning_rate"]
    config.update(basis=RankBasis(basis).value, top_n=top_n, grid=grid)
    return ComparisonTable(rows=rows, fingerprint=fingerprint, config=config)


def _fmt(value: float | None) -> str:
    return "NaN" if value is None else repr(value)


def emit_plot_data(table: ComparisonTable, out_dir) -> list[Path]:
    """Write ``mae.csv``, ``matthew.csv`` and ``comparison.json`` into ``out_dir``."""
    if not table.rows:
        raise ValueError("empty comparison table")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, attr in (("mae.csv", "mae"), ("matthew.csv", "matthew_degree")):
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["learning_rate"] + [k.value for k in KINDS])
            for rate in table.rates():
                writer.writerow([repr(rate)] + [_fmt(getattr(table.cell(rate, k), attr)) for k in KINDS])
        written.append(path)
    path = out / "comparison.json"
    path.write_text(json.dumps(table.to_dict(), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    written.append(path)
    return written
