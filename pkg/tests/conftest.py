import os
from pathlib import Path

import numpy as np
import pytest

from rankmat.dataset import from_triplets

ROOT = Path(__file__).resolve().parents[1]


def movielens_path():
    """ml-latest-small ratings.csv, from $RANKMAT_ML_RATINGS or data/ in the repo."""
    candidates = [os.environ.get("RANKMAT_ML_RATINGS"), ROOT / "data" / "ml-latest-small" / "ratings.csv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture
def ml_path():
    path = movielens_path()
    if path is None:
        pytest.skip("ml-latest-small ratings.csv not available")
    return path


@pytest.fixture
def write_csv(tmp_path):
    def _write(body, name="ratings.csv", newline="\n"):
        path = tmp_path / name
        path.write_bytes(body.replace("\n", newline).encode())
        return path

    return _write


@pytest.fixture
def random_dataset():
    def _make(m=5, n=5, density=0.6, seed=0):
        rng = np.random.default_rng(seed)
        trip = [
            (u, i, float(rng.integers(1, 11)) / 2)
            for u in range(m)
            for i in range(n)
            if rng.random() < density
        ]
        return from_triplets(trip, m, n)

    return _make


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
