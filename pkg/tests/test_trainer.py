import numpy as np
import pytest

from rankmat.dataset import from_triplets, split
from rankmat.metrics import evaluate
from rankmat.models import EmbeddingModel, ModelKind, grad_pair, loss, targets_for
from rankmat.ranking import compute_ranks
from rankmat.trainer import (
    TrainConfig,
    _sgd_epoch,
    default_grid,
    grid_search,
    init_embeddings,
    shuffle_rng,
    train,
)


def planted(m=20, n=30, k=3, seed=0):
    rng = np.random.default_rng(seed)
    R = rng.random((m, k)) @ rng.random((n, k)).T
    return from_triplets([(u, i, R[u, i]) for u in range(m) for i in range(n)])


def test_init_range_and_shape():
    model = init_embeddings(2, 3, 4, 5, 0.1)
    assert model.user_factors.shape == (2, 4) and model.item_factors.shape == (3, 4)
    for mat in (model.user_factors, model.item_factors):
        assert (mat >= 0).all() and (mat < 0.1).all()


def test_init_deterministic():
    a, b = init_embeddings(4, 6, 3, 11, 0.5), init_embeddings(4, 6, 3, 11, 0.5)
    assert a.user_factors.tobytes() == b.user_factors.tobytes()
    assert a.item_factors.tobytes() == b.item_factors.tobytes()


def test_init_mean():
    model = init_embeddings(1, 1, 1000, 42, 0.1)
    entries = np.concatenate([model.user_factors.ravel(), model.item_factors.ravel()])
    assert abs(entries.mean() - 0.05) <= 0.005


@pytest.mark.parametrize("bad", [dict(learning_rate=0.0), dict(learning_rate=-1.0), dict(k=0),
                                 dict(epochs=0), dict(init_scale=0.0)])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad)


@pytest.mark.parametrize("kind", list(ModelKind))
def test_kernel_step_matches_grad_pair(random_dataset, kind):
    ds = random_dataset(6, 7)
    ranks = compute_ranks(ds)
    model = init_embeddings(6, 7, 4, 0, 0.5, kind)
    U, V = model.user_factors.copy(), model.item_factors.copy()
    targets = targets_for(kind, ds, ranks)
    order = shuffle_rng(0).permutation(len(ds))
    lr = 0.05
    for idx in order:
        i, j = ds.users[idx], ds.items[idx]
        du, dv = grad_pair(U[i], V[j], targets[idx])
        U[i], V[j] = U[i] - lr * du, V[j] - lr * dv
    _sgd_epoch(model.user_factors, model.item_factors, ds.users, ds.items, targets, order, lr)
    np.testing.assert_allclose(model.user_factors, U, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(model.item_factors, V, rtol=1e-13, atol=1e-15)


def test_single_triplet_follows_scalar_iteration():
    ds = from_triplets([(0, 0, 3.0)])
    ranks = compute_ranks(ds)
    cfg = TrainConfig(k=1, learning_rate=0.01, epochs=3000, seed=5)
    trace = train(cfg, ds, ranks)
    model0 = init_embeddings(1, 1, 1, 5, cfg.init_scale)
    u, v = model0.user_factors[0, 0], model0.item_factors[0, 0]
    for _ in range(cfg.epochs):
        e = u * v - 3.0
        u, v = u - cfg.learning_rate * 2 * e * v, v - cfg.learning_rate * 2 * e * u
    dot = trace.final_model.user_factors[0, 0] * trace.final_model.item_factors[0, 0]
    assert dot == pytest.approx(u * v, abs=1e-12)
    assert abs(dot - 3.0) < 1e-4


def test_planted_recovery():
    ds = planted()
    trace = train(TrainConfig(k=3, learning_rate=0.01, epochs=2000), ds, compute_ranks(ds))
    assert not trace.diverged
    assert np.sqrt(trace.losses[-1] / len(ds)) < 1e-2


def test_trace_matches_recomputed_loss(random_dataset):
    ds = random_dataset(8, 8)
    ranks = compute_ranks(ds)
    trace = train(TrainConfig(kind="rankmat", k=2, epochs=5), ds, ranks)
    assert trace.epochs_run == 5
    assert trace.losses[-1] == loss(trace.final_model, ds, ranks)


def test_deterministic(random_dataset):
    ds = random_dataset(10, 12)
    ranks = compute_ranks(ds)
    cfg = TrainConfig(kind="glovemat", k=3, epochs=20, learning_rate=0.02)
    a, b = train(cfg, ds, ranks), train(cfg, ds, ranks)
    assert a.losses == b.losses
    assert a.final_model.user_factors.tobytes() == b.final_model.user_factors.tobytes()


def test_divergence_detected_and_stops():
    ds = planted(5, 5)
    trace = train(TrainConfig(k=3, learning_rate=5.0, epochs=100), ds, compute_ranks(ds))
    assert trace.diverged
    assert trace.epochs_run < 100


def test_tiny_dataset_loss_mostly_decreasing():
    rng = np.random.default_rng(1)
    ds = from_triplets([(u, i, float(rng.integers(1, 6))) for u, i in
                        [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 3), (3, 2), (3, 3), (0, 3), (1, 0)]])
    ranks = compute_ranks(ds)
    for kind in ModelKind:
        losses = train(TrainConfig(kind=kind, k=2, learning_rate=1e-3, epochs=300), ds, ranks).losses
        steps = np.diff(losses)
        assert (steps <= 0).mean() >= 0.95


def test_dimension_mismatch(random_dataset):
    a, b = random_dataset(5, 5), random_dataset(6, 5)
    with pytest.raises(ValueError):
        train(TrainConfig(), a, compute_ranks(b))


def test_default_grid():
    grid = default_grid()
    assert len(grid) == 8
    assert grid[0] == pytest.approx(1e-4) and grid[-1] == pytest.approx(5e-2)
    np.testing.assert_allclose(np.diff(np.log(grid)), np.log(500) / 7)


@pytest.fixture
def small_split(random_dataset):
    ds = random_dataset(15, 25, 0.5, seed=4)
    pair = split(ds, 0.8, 0)
    return pair.train, pair.test, compute_ranks(pair.train)


def test_grid_singleton_matches_direct(small_split):
    tr, te, ranks = small_split
    base = TrainConfig(kind="rankmat", k=4, epochs=15)
    [(rate, report)] = grid_search(base, [0.01], tr, te, ranks, top_n=3)
    direct = evaluate(train(base.replace(learning_rate=0.01), tr, ranks), tr, te, ranks, top_n=3)
    assert rate == 0.01
    assert report == direct


def test_grid_order_independent(small_split):
    tr, te, ranks = small_split
    base = TrainConfig(k=4, epochs=15)
    ab = dict(grid_search(base, [0.01, 0.003], tr, te, ranks, top_n=3))
    ba = dict(grid_search(base, [0.003, 0.01], tr, te, ranks, top_n=3))
    assert ab == ba
    assert list(dict(grid_search(base, [0.003, 0.01], tr, te, ranks, top_n=3))) == [0.003, 0.01]


def test_grid_rejects_bad_rates(small_split):
    tr, te, ranks = small_split
    for rates in ([], [0.01, 0.0]):
        with pytest.raises(ValueError):
            grid_search(TrainConfig(), rates, tr, te, ranks)


def test_grid_diverged_report_is_flagged(small_split):
    tr, te, ranks = small_split
    [(_, report)] = grid_search(TrainConfig(k=4, epochs=50), [50.0], tr, te, ranks)
    assert report.diverged and report.mae is None and report.matthew_degree is None


def test_grid_divergence_on_movielens(ml_path):
    from rankmat.dataset import load_ratings

    pair = split(load_ratings(ml_path), 0.8, 42)
    ranks = compute_ranks(pair.train)
    rates = np.geomspace(1e-4, 1.0, 8).tolist()
    results = grid_search(TrainConfig(epochs=20), rates, pair.train, pair.test, ranks)
    flags = [report.diverged for _, report in results]
    assert flags[-1] and not flags[0]
    # once a rate diverges, every larger one does too
    assert flags == sorted(flags)
