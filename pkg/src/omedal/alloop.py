"""Active-learning loop: sampling, labeling, (re)training and cost accounting.

Four modes are supported. ``medal`` resets the learner each iteration and
retrains on every labeled example; ``omedal`` keeps the weights and trains on
the newly labeled examples plus a fixed random replay of earlier ones.
``random`` and ``uncertainty`` are baseline samplers trained the ``medal`` way
unless ``online`` is set.
"""

import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics, sampler
from .exceptions import ConfigError, PreconditionError, UnsupportedPredictionError
from .learner import Learner

MODES = ("medal", "omedal", "random", "uncertainty")
MONITORS = ("auto", "val_acc", "train_loss", "train_acc")
STOPS = ("oracle-exhausted", "label-budget")
LEDGER_COLUMNS = ("al_iter", "epoch", "n_labeled", "pct_labeled", "n_backprop_cum",
                  "train_loss", "test_acc", "test_auc", "wall_ms", "seed")


@dataclass(frozen=True)
class LoopConfig:
    """AL loop settings.

    Exactly one of ``epochs_per_iter`` (fixed schedule) and ``patience``
    (early stopping, capped at ``max_epochs_per_iter``) must be set.
    ``train_until_fit`` additionally ends an iteration's training as soon as
    training accuracy reaches 100%.
    """

    mode: str = "omedal"
    p: float = 0.875
    epochs_per_iter: int | None = None
    patience: int | None = 10
    max_epochs_per_iter: int = 150
    train_until_fit: bool = False
    monitor: str = "auto"
    initial_labeled: int = 1
    stop: str = "oracle-exhausted"
    label_budget: int | None = None
    max_iters: int | None = None
    online: bool | None = None
    eval_every_epoch: bool = False
    scorer: str = "centroid"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}", key="mode")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]", key="p")
        if (self.epochs_per_iter is None) == (self.patience is None):
            raise ConfigError("set exactly one of epochs_per_iter and patience", key="epochs_per_iter")
        if self.epochs_per_iter is not None and self.epochs_per_iter < 1:
            raise ConfigError("epochs_per_iter must be positive", key="epochs_per_iter")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be positive", key="patience")
        if self.max_epochs_per_iter < 1:
            raise ConfigError("max_epochs_per_iter must be positive", key="max_epochs_per_iter")
        if self.monitor not in MONITORS:
            raise ConfigError(f"monitor must be one of {MONITORS}", key="monitor")
        if self.initial_labeled < 0:
            raise ConfigError("initial_labeled must be nonnegative", key="initial_labeled")
        if self.stop not in STOPS:
            raise ConfigError(f"stop must be one of {STOPS}", key="stop")
        if self.stop == "label-budget" and (self.label_budget is None or self.label_budget < 1):
            raise ConfigError("label-budget stop needs a positive label_budget", key="label_budget")
        if self.max_iters is not None and self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative", key="max_iters")
        if self.scorer not in sampler.SCORERS:
            raise ConfigError(f"scorer must be one of {sampler.SCORERS}", key="scorer")

    @property
    def is_online(self):
        return self.mode == "omedal" if self.online is None else bool(self.online)


def replay_count(p, n_prev):
    """Number of earlier examples replayed: ``floor(p * n_prev)``.

    The small guard keeps values such as ``0.29 * 100`` from flooring to 28.
    """
    return min(n_prev, math.floor(p * n_prev + 1e-9))


def check_early_stop(history, patience):
    """True once the best (strictly greatest, first occurrence) value is
    ``patience`` or more entries behind the latest one."""
    if not len(history):
        raise PreconditionError("empty metric history")
    best = int(np.argmax(history))
    return len(history) - 1 - best >= patience


def predicted_examples_processed(loop_config, sampler_config, t, pool_size=None):
    """Cumulative backprop examples after ``t`` AL iterations of a fixed-epoch run.

    Sums ``E * (ell + floor(p * n_prev))`` over iterations, where ``n_prev`` is
    the labeled count before the iteration. Retraining modes replay everything
    (p = 1). With ``pool_size`` given, ``ell`` is clipped once the pool runs out.
    """
    if loop_config.epochs_per_iter is None or loop_config.train_until_fit:
        raise UnsupportedPredictionError("only fixed-epoch schedules are predictable in advance")
    E = loop_config.epochs_per_iter
    p = loop_config.p if loop_config.is_online else 1.0
    n_prev = loop_config.initial_labeled
    if pool_size is not None:
        n_prev = min(n_prev, pool_size)
    total = 0
    for _ in range(t):
        ell = sampler_config.ell
        if pool_size is not None:
            ell = min(ell, pool_size - n_prev)
            if ell <= 0:
                break
        total += E * (ell + replay_count(p, n_prev))
        n_prev += ell
    return total


@dataclass
class RunLedger:
    """Per-epoch training record of one AL run."""

    seed: int
    mode: str
    pool_size: int
    rows: list = field(default_factory=list)
    selections: list = field(default_factory=list)
    n_updates: int = 0
    learner: object = field(default=None, repr=False)

    def add(self, **row):
        self.rows.append(row)

    @property
    def examples_processed(self):
        return self.rows[-1]["n_backprop_cum"] if self.rows else 0

    def curve(self):
        """``(pct_labeled, test_acc)`` at every evaluated row."""
        return [(r["pct_labeled"], r["test_acc"]) for r in self.rows if r["test_acc"] is not None]

    @property
    def max_test_acc(self):
        accs = [a for _, a in self.curve()]
        return max(accs) if accs else float("nan")

    def pct_labeled_to_reach(self, target):
        return metrics.labels_to_reach(self.curve(), target)

    def to_csv(self, wall_time=False):
        """Ledger as CSV text. ``wall_ms`` is left blank unless ``wall_time`` is
        set, so that identical runs give byte-identical files."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for r in self.rows:
            out = dict(r, seed=self.seed)
            if not wall_time:
                out["wall_ms"] = None
            writer.writerow([_fmt(out[c]) for c in LEDGER_COLUMNS])
        return buf.getvalue()


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def evaluate(learner, X, y):
    """Test accuracy and AUC (one-vs-rest macro average for more than two classes)."""
    probs = learner.predict_proba(X)
    acc = metrics.accuracy(np.argmax(probs, axis=1), y)
    classes = [1] if probs.shape[1] == 2 else range(probs.shape[1])
    aucs = [metrics.auc(probs[:, k], (y == k).astype(np.int64))
            for k in classes if 0 < np.sum(y == k) < len(y)]
    return acc, (float(np.mean(aucs)) if aucs else float("nan"))


def train_schedule(learner, X, y, config, monitor=None):
    """Train per the loop schedule, yielding ``(epoch, mean_loss)`` after each epoch.

    ``monitor`` is a callable returning the metric watched for patience (higher
    is better); by default the negated epoch loss.
    """
    history = []
    max_epochs = config.epochs_per_iter or config.max_epochs_per_iter
    for epoch in range(1, max_epochs + 1):
        loss = learner.train_epoch(X, y)
        yield epoch, loss
        if config.train_until_fit and learner.train_accuracy(X, y) == 1.0:
            return
        if config.patience is not None:
            history.append(monitor(loss) if monitor is not None else -loss)
            if check_early_stop(history, config.patience):
                return


def medal_iteration(learner, X, y, config, monitor=None):
    """Reset to the initial weights and retrain on the full labeled set."""
    if len(y) == 0:
        raise PreconditionError("medal iteration needs labeled examples")
    learner.reset()
    yield from train_schedule(learner, X, y, config, monitor)


def replay_subset(n_prev, p, rng):
    """Positions of the earlier examples replayed this iteration, drawn without replacement."""
    k = replay_count(p, n_prev)
    return np.sort(rng.choice(n_prev, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)


def omedal_iteration(learner, new_idx, prev_idx, p, X, labels, config, rng, monitor=None, record=None):
    """Continue training on the new examples plus a replayed subset of earlier ones.

    The replay subset is drawn once and used for every epoch of the
    iteration. ``labels`` maps pool indices to their (already revealed) labels.
    ``record``, when given, receives the training index array.
    """
    new_idx = np.asarray(new_idx, dtype=np.int64)
    prev_idx = np.asarray(prev_idx, dtype=np.int64)
    if np.intersect1d(new_idx, prev_idx).size:
        raise PreconditionError("new items overlap previously labeled items")
    train_idx = np.concatenate([new_idx, prev_idx[replay_subset(len(prev_idx), p, rng)]])
    if record is not None:
        record(train_idx)
    yield from train_schedule(learner, X[train_idx], labels(train_idx), config, monitor)


def _streams(seed):
    init, sampling, replay, initial = np.random.SeedSequence(seed).spawn(4)
    return (int(init.generate_state(1, np.uint64)[0]), np.random.default_rng(sampling),
            np.random.default_rng(replay), np.random.default_rng(initial))


def run_experiment(loop_config, sampler_config, learner_config, pool, on_train_set=None):
    """Run one AL experiment on a copy of ``pool`` and return its :class:`RunLedger`.

    ``on_train_set(al_iter, indices)`` is called with the training index set of
    every iteration before training starts.
    """
    cfg = loop_config
    pool = pool.copy()
    init_seed, rng_sample, rng_replay, rng_initial = _streams(cfg.seed)
    learner = Learner(dataclasses.replace(learner_config, seed=init_seed))
    X = pool.X
    X_test, y_test = X[pool.test], pool.labels_of(pool.test)
    if len(y_test) == 0:
        raise ConfigError("pool has no test examples", key="partition")
    ledger = RunLedger(seed=cfg.seed, mode=cfg.mode, pool_size=pool.initial_size)

    if pool.n_labeled == 0 and cfg.initial_labeled > 0:
        pool.label(pool.initial_labels(cfg.initial_labeled, rng_initial))

    monitor_name = cfg.monitor
    if monitor_name == "auto":
        monitor_name = "val_acc" if len(pool.validation) else "train_loss"
    if monitor_name == "val_acc":
        if not len(pool.validation):
            raise ConfigError("monitor val_acc needs a validation split", key="monitor")
        X_val, y_val = X[pool.validation], pool.labels_of(pool.validation)

    al_iter = 0
    while True:
        if cfg.max_iters is not None and al_iter >= cfg.max_iters:
            break
        if pool.n_unlabeled == 0:
            break
        n_picks = sampler_config.ell
        if cfg.stop == "label-budget":
            n_picks = min(n_picks, cfg.label_budget - pool.n_labeled)
            if n_picks <= 0:
                break
        al_iter += 1
        t0 = time.perf_counter()

        prev = pool.labeled
        new = _select(cfg, sampler_config, learner, pool, n_picks, rng_sample)
        pool.label(new)
        ledger.selections.append(new)

        if monitor_name == "val_acc":
            def monitor(loss):
                return metrics.accuracy(learner.predict(X_val), y_val)
        elif monitor_name == "train_acc":
            def monitor(loss):
                return learner.train_accuracy(X_train, y_train)
        else:
            monitor = None

        if cfg.is_online:
            def record(idx):
                nonlocal X_train, y_train
                X_train, y_train = X[idx], pool.labels_of(idx)
                if on_train_set is not None:
                    on_train_set(al_iter, idx)
            X_train = y_train = None
            epochs = omedal_iteration(learner, new, prev, cfg.p, X, pool.labels_of, cfg,
                                      rng_replay, monitor, record)
        else:
            idx = pool.labeled
            X_train, y_train = X[idx], pool.labels_of(idx)
            if on_train_set is not None:
                on_train_set(al_iter, idx)
            epochs = medal_iteration(learner, X_train, y_train, cfg, monitor)

        rows = []
        for epoch, loss in epochs:
            rows.append(dict(al_iter=al_iter, epoch=epoch, n_labeled=pool.n_labeled,
                             pct_labeled=pool.n_labeled / pool.initial_size,
                             n_backprop_cum=learner.backprop_counter, train_loss=float(loss),
                             test_acc=None, test_auc=None, wall_ms=None))
            if cfg.eval_every_epoch:
                rows[-1]["test_acc"], rows[-1]["test_auc"] = evaluate(learner, X_test, y_test)
        if rows and rows[-1]["test_acc"] is None:
            rows[-1]["test_acc"], rows[-1]["test_auc"] = evaluate(learner, X_test, y_test)
        if rows:
            rows[-1]["wall_ms"] = (time.perf_counter() - t0) * 1e3
        for r in rows:
            ledger.add(**r)
    ledger.n_updates = learner.n_updates
    ledger.learner = learner
    return ledger


def _select(cfg, sampler_config, learner, pool, n_picks, rng):
    oracle = pool.unlabeled
    if cfg.mode == "random" or (pool.n_labeled == 0 and cfg.mode in ("medal", "omedal")):
        return sampler.random_select(oracle, n_picks, rng)
    probs, embs = learner.forward(pool.X[oracle])
    if cfg.mode == "uncertainty":
        return sampler.uncertainty_select(probs, n_picks, oracle)
    train_embs = learner.embed(pool.X[pool.labeled])
    sc = dataclasses.replace(sampler_config, ell=n_picks)
    return sampler.medal_select(probs, embs, oracle, train_embs, sc, cfg.scorer).indices


def full_data_baseline(learner_config, X_train, y_train, X_test, y_test, epochs, seed=0):
    """Train a fresh learner on all training data for a fixed number of epochs.

    Returns ``(test_accuracy, learner)``; the learner's backprop counter ends at
    ``len(y_train) * epochs``.
    """
    init_seed = _streams(seed)[0]
    learner = Learner(dataclasses.replace(learner_config, seed=init_seed))
    for _ in range(epochs):
        learner.train_epoch(X_train, y_train)
    return metrics.accuracy(learner.predict(X_test), y_test), learner
