import dataclasses

import numpy as np
import pytest

from omedal.alloop import (LoopConfig, check_early_stop, full_data_baseline, medal_iteration,
                           omedal_iteration, predicted_examples_processed, replay_count,
                           run_experiment, train_schedule)
from omedal.data import DatasetPool, make_blobs
from omedal.exceptions import ConfigError, PreconditionError, UnsupportedPredictionError
from omedal.learner import Learner, LearnerConfig
from omedal.sampler import SamplerConfig

FIXED = dict(epochs_per_iter=10, patience=None)


@pytest.fixture(scope="module")
def blobs():
    return make_blobs(500, 4, n_classes=2, separation=3.0, seed=0)


@pytest.fixture
def pool(blobs):
    return DatasetPool.from_split(*blobs, test_fraction=0.2, seed=0)


@pytest.fixture
def learner_config():
    return LearnerConfig(input_dim=4, hidden_dims=(8, 4))


# -- config ---------------------------------------------------------------------

@pytest.mark.parametrize("kw,key", [
    (dict(mode="active"), "mode"),
    (dict(p=1.5), "p"),
    (dict(epochs_per_iter=5, patience=5), "epochs_per_iter"),
    (dict(epochs_per_iter=None, patience=None), "epochs_per_iter"),
    (dict(stop="label-budget"), "label_budget"),
])
def test_loop_config_validation(kw, key):
    with pytest.raises(ConfigError) as err:
        LoopConfig(**kw)
    assert err.value.key == key


# -- early stopping -----------------------------------------------------------------

def test_early_stop_examples():
    assert not any(check_early_stop(list(range(k)), 2) for k in range(1, 20))
    h = [0.80, 0.79, 0.78, 0.77]
    assert [check_early_stop(h[:k], 3) for k in range(1, 5)] == [False, False, False, True]
    assert not check_early_stop([0.5, 0.4], 10)
    # equal values are not improvements
    assert check_early_stop([0.5, 0.5, 0.5], 2)
    with pytest.raises(PreconditionError):
        check_early_stop([], 1)


# -- cost formula --------------------------------------------------------------------

def test_predicted_examples_processed_values():
    cfg = LoopConfig(mode="omedal", p=0.875, **FIXED)
    sc = SamplerConfig(ell=20)
    assert predicted_examples_processed(cfg, sc, 1) == 200
    assert predicted_examples_processed(cfg, sc, 2) == 580
    zero = dataclasses.replace(cfg, p=0.0)
    assert [predicted_examples_processed(zero, sc, t) for t in range(5)] == [t * 10 * 20 for t in range(5)]
    with pytest.raises(UnsupportedPredictionError):
        predicted_examples_processed(LoopConfig(patience=5), sc, 3)


def test_prediction_matches_formula_by_hand():
    cfg = LoopConfig(mode="omedal", p=0.3, epochs_per_iter=4, patience=None, initial_labeled=7)
    expected, n = 0, 7
    for _ in range(6):
        expected += 4 * (5 + int(np.floor(0.3 * n)))
        n += 5
    assert predicted_examples_processed(cfg, SamplerConfig(ell=5), 6) == expected


def test_replay_count_floor():
    assert replay_count(0.875, 21) == 18
    assert replay_count(0.29, 100) == 29
    assert replay_count(1.0, 13) == 13
    assert replay_count(0.0, 13) == 0


# -- single iterations -----------------------------------------------------------------

def test_medal_iteration_counts_and_resets(blobs, learner_config):
    X, y = blobs
    learner = Learner(learner_config)
    cfg = LoopConfig(mode="medal", epochs_per_iter=1, patience=None)
    list(medal_iteration(learner, X[:30], y[:30], cfg))
    assert learner.backprop_counter == 30
    list(medal_iteration(learner, X[:30], y[:30], cfg))
    assert learner.backprop_counter == 60
    with pytest.raises(PreconditionError):
        list(medal_iteration(learner, X[:0], y[:0], cfg))


def test_medal_iterations_start_from_identical_weights(blobs, learner_config):
    X, y = blobs
    learner = Learner(learner_config)
    cfg = LoopConfig(mode="medal", epochs_per_iter=3, patience=None)
    snapshots = []
    for k in (20, 40):
        gen = medal_iteration(learner, X[:k], y[:k], cfg)
        learner.reset()
        snapshots.append([w.copy() for w in learner.weights])
        list(gen)
    for a, b in zip(*snapshots):
        assert np.array_equal(a, b)
    for (w0, _), w in zip(learner.initial_snapshot, snapshots[0]):
        assert np.array_equal(w0, w)


def test_train_until_fit_stops_at_full_training_accuracy():
    X, y = make_blobs(200, 2, separation=8.0, seed=1)
    learner = Learner(LearnerConfig(input_dim=2, hidden_dims=(8, 4), seed=1))
    cfg = LoopConfig(mode="medal", epochs_per_iter=None, patience=10_000, max_epochs_per_iter=500,
                     train_until_fit=True)
    epochs = list(medal_iteration(learner, X, y, cfg))
    assert learner.train_accuracy(X, y) == 1.0
    assert len(epochs) < 500


def test_patience_schedule_stops_on_stalled_metric(blobs, learner_config):
    X, y = blobs
    learner = Learner(learner_config)
    cfg = LoopConfig(epochs_per_iter=None, patience=3, max_epochs_per_iter=50)
    values = iter([0.5, 0.6, 0.55, 0.58, 0.6, 0.9])
    epochs = list(train_schedule(learner, X[:40], y[:40], cfg, monitor=lambda loss: next(values)))
    assert len(epochs) == 5
    capped = list(train_schedule(learner, X[:40], y[:40], dataclasses.replace(cfg, max_epochs_per_iter=2),
                                 monitor=lambda loss: 0.0))
    assert len(capped) == 2


@pytest.mark.parametrize("p,expected", [(1.0, 41), (0.0, 20), (0.875, 20 + 18)])
def test_omedal_training_set_size(blobs, learner_config, p, expected):
    X, y = blobs
    learner = Learner(learner_config)
    prev = np.arange(21)
    new = np.arange(100, 120)
    seen = []
    cfg = LoopConfig(mode="omedal", epochs_per_iter=2, patience=None)
    list(omedal_iteration(learner, new, prev, p, X, lambda idx: y[idx], cfg, np.random.default_rng(0),
                          record=seen.append))
    assert len(seen[0]) == expected
    assert set(new) <= set(seen[0].tolist())
    assert learner.backprop_counter == 2 * expected
    if p == 1.0:
        assert sorted(seen[0].tolist()) == sorted(new.tolist() + prev.tolist())


def test_omedal_rejects_overlap(blobs, learner_config):
    X, y = blobs
    with pytest.raises(PreconditionError):
        list(omedal_iteration(Learner(learner_config), [1, 2], [2, 3], 0.5, X, lambda i: y[i],
                              LoopConfig(**FIXED), np.random.default_rng(0)))


def test_replay_subset_fixed_within_iteration(blobs, learner_config, monkeypatch):
    X, y = blobs
    learner = Learner(learner_config)
    batches = []
    original = Learner.train_epoch

    def spy(self, Xb, yb):
        batches.append(sorted(map(tuple, np.round(Xb, 12))))
        return original(self, Xb, yb)

    monkeypatch.setattr(Learner, "train_epoch", spy)
    cfg = LoopConfig(mode="omedal", epochs_per_iter=4, patience=None)
    list(omedal_iteration(learner, np.arange(200, 210), np.arange(50), 0.5, X, lambda i: y[i], cfg,
                          np.random.default_rng(3)))
    assert len(batches) == 4 and all(b == batches[0] for b in batches)
    assert len(batches[0]) == 10 + 25


# -- full runs ---------------------------------------------------------------------

def test_two_iterations_exhaust_pool_of_41(learner_config):
    X, y = make_blobs(52, 4, seed=3)
    pool = DatasetPool.from_split(X, y, 0.2, seed=3)
    assert pool.initial_size == 41
    ledger = run_experiment(LoopConfig(mode="omedal", **FIXED), SamplerConfig(M=50, ell=20), learner_config, pool)
    assert len(ledger.selections) == 2
    assert ledger.rows[-1]["n_labeled"] == 41 and ledger.rows[-1]["pct_labeled"] == 1.0


def test_run_does_not_mutate_callers_pool(pool, learner_config):
    run_experiment(LoopConfig(mode="random", max_iters=2, **FIXED), SamplerConfig(), learner_config, pool)
    assert pool.n_labeled == 0


def test_fixed_epoch_omedal_counter_matches_prediction(pool, learner_config):
    cfg = LoopConfig(mode="omedal", p=0.875, max_iters=6, **FIXED)
    sc = SamplerConfig(M=50, ell=20)
    ledger = run_experiment(cfg, sc, learner_config, pool)
    per_iter = {r["al_iter"]: r["n_backprop_cum"] for r in ledger.rows}
    for t, n in per_iter.items():
        assert n == predicted_examples_processed(cfg, sc, t)
    assert ledger.learner.backprop_counter == predicted_examples_processed(cfg, sc, 6)


def test_fixed_epoch_medal_counter_matches_prediction(pool, learner_config):
    cfg = LoopConfig(mode="medal", epochs_per_iter=3, patience=None, initial_labeled=5, max_iters=4)
    sc = SamplerConfig(ell=10)
    ledger = run_experiment(cfg, sc, learner_config, pool)
    assert ledger.examples_processed == predicted_examples_processed(cfg, sc, 4) == 3 * (15 + 25 + 35 + 45)


def test_prediction_clips_at_pool_exhaustion(learner_config):
    X, y = make_blobs(70, 4, seed=8)
    pool = DatasetPool.from_split(X, y, 0.2, seed=8)
    cfg = LoopConfig(mode="omedal", p=0.5, **FIXED)
    sc = SamplerConfig(ell=20)
    ledger = run_experiment(cfg, sc, learner_config, pool)
    t = len(ledger.selections)
    assert ledger.examples_processed == predicted_examples_processed(cfg, sc, t, pool_size=pool.initial_size)


def test_ledger_invariants(pool, learner_config):
    ledger = run_experiment(LoopConfig(mode="medal", patience=3, max_iters=4), SamplerConfig(),
                            learner_config, pool)
    n = [r["n_backprop_cum"] for r in ledger.rows]
    assert all(b > a for a, b in zip(n, n[1:]))
    labeled = [r["n_labeled"] for r in ledger.rows]
    assert all(b >= a for a, b in zip(labeled, labeled[1:]))
    for r in ledger.rows:
        assert r["pct_labeled"] == r["n_labeled"] / pool.initial_size
    # test metrics are evaluated once per AL iteration by default
    assert sum(r["test_acc"] is not None for r in ledger.rows) == 4


def test_partition_conserved_throughout(pool, learner_config):
    seen = []

    def check(al_iter, idx):
        seen.append(len(idx))

    run_experiment(LoopConfig(mode="uncertainty", max_iters=3, **FIXED), SamplerConfig(ell=15),
                   learner_config, pool, on_train_set=check)
    assert seen == [16, 31, 46]


def test_medal_starts_each_iteration_from_fresh_weights(pool, learner_config, monkeypatch):
    probe = pool.X[:25]
    outputs = []
    original = Learner.reset

    def spy(self):
        result = original(self)
        outputs.append(self.predict_proba(probe))
        return result

    monkeypatch.setattr(Learner, "reset", spy)
    ledger = run_experiment(LoopConfig(mode="medal", max_iters=3, **FIXED), SamplerConfig(), learner_config, pool)
    fresh = Learner(ledger.learner.config).predict_proba(probe)
    assert len(outputs) == 3
    for out in outputs:
        np.testing.assert_array_equal(out, fresh)


def test_omedal_carries_weights_between_iterations(pool, learner_config):
    probe = pool.X[:25]
    starts = []
    holder = {}

    def capture(al_iter, idx):
        starts.append(holder["ledger_learner"].predict_proba(probe) if "ledger_learner" in holder else None)

    import omedal.alloop as alloop
    real = alloop.Learner

    class Tracking(real):
        def __post_init__(self):
            super().__post_init__()
            holder["ledger_learner"] = self

    alloop.Learner = Tracking
    try:
        ledger = run_experiment(LoopConfig(mode="omedal", max_iters=3, **FIXED), SamplerConfig(),
                                learner_config, pool, on_train_set=capture)
    finally:
        alloop.Learner = real
    fresh = Learner(ledger.learner.config).predict_proba(probe)
    np.testing.assert_array_equal(starts[0], fresh)
    assert not np.allclose(starts[1], fresh)
    assert not np.allclose(starts[2], starts[1])


def test_mode_isolation(pool, learner_config):
    ledgers = {m: run_experiment(LoopConfig(mode=m, max_iters=2, seed=4, **FIXED), SamplerConfig(),
                                 learner_config, pool)
               for m in ("medal", "random", "uncertainty")}
    inits = {m: led.learner.initial_snapshot for m, led in ledgers.items()}
    for m in ("random", "uncertainty"):
        for (a, _), (b, _) in zip(inits["medal"], inits[m]):
            assert np.array_equal(a, b)
    # the initial labeled example is shared; the sampled batches are not
    assert ledgers["medal"].selections[0] != ledgers["random"].selections[0]
    assert ledgers["random"].selections[0] != ledgers["uncertainty"].selections[0]


def test_run_is_deterministic(pool, learner_config):
    cfg = LoopConfig(mode="omedal", max_iters=3, seed=2, **FIXED)
    a = run_experiment(cfg, SamplerConfig(), learner_config, pool)
    b = run_experiment(cfg, SamplerConfig(), learner_config, pool)
    assert a.to_csv() == b.to_csv()
    assert a.selections == b.selections


def test_zero_initial_labels_bootstraps_randomly(pool, learner_config):
    ledger = run_experiment(LoopConfig(mode="medal", initial_labeled=0, max_iters=2, **FIXED),
                            SamplerConfig(ell=10), learner_config, pool)
    assert [len(s) for s in ledger.selections] == [10, 10]
    assert ledger.rows[-1]["n_labeled"] == 20


def test_label_budget_stop(pool, learner_config):
    ledger = run_experiment(LoopConfig(mode="random", stop="label-budget", label_budget=50, **FIXED),
                            SamplerConfig(ell=20), learner_config, pool)
    assert [len(s) for s in ledger.selections] == [20, 20, 9]


def test_validation_monitor(blobs, learner_config):
    X, y = blobs
    pool = DatasetPool(X, y, test_idx=np.arange(100), val_idx=np.arange(100, 150))
    ledger = run_experiment(LoopConfig(mode="medal", patience=2, max_iters=2), SamplerConfig(),
                            learner_config, pool)
    assert len(ledger.selections) == 2
    with pytest.raises(ConfigError):
        run_experiment(LoopConfig(mode="medal", patience=2, monitor="val_acc", max_iters=1), SamplerConfig(),
                       learner_config, DatasetPool.from_split(X, y, 0.2, seed=0))


def test_more_labels_never_evaluated_worse_than_initial_set():
    X, y = make_blobs(500, 2, separation=3.0, seed=11)
    pool = DatasetPool.from_split(X, y, 0.2, seed=11)
    lc = LearnerConfig(input_dim=2, hidden_dims=(8, 4))
    ledger = run_experiment(LoopConfig(mode="medal", patience=10, initial_labeled=20, seed=1), SamplerConfig(),
                            lc, pool)
    init_only = run_experiment(LoopConfig(mode="medal", patience=10, initial_labeled=20, seed=1, max_iters=0),
                               SamplerConfig(), lc, pool)
    assert init_only.rows == []
    # train on the initial labeled set only, with the same schedule and seed
    rng_pool = pool.copy()
    from omedal.alloop import _streams
    init_seed, _, _, rng_initial = _streams(1)
    rng_pool.label(rng_pool.initial_labels(20, rng_initial))
    learner = Learner(dataclasses.replace(lc, seed=init_seed))
    idx = rng_pool.labeled
    list(medal_iteration(learner, X[idx], y[idx], LoopConfig(mode="medal", patience=10)))
    initial_acc = np.mean(learner.predict(X[pool.test]) == y[pool.test])
    assert ledger.max_test_acc >= initial_acc


def test_full_data_baseline_cost(pool, learner_config):
    idx = pool.unlabeled
    X, y = pool.X, pool._y
    acc, learner = full_data_baseline(learner_config, X[idx], y[idx], X[pool.test], y[pool.test], epochs=5)
    assert learner.backprop_counter == len(idx) * 5
    assert 0.5 < acc <= 1.0
