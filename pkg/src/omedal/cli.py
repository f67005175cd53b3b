"""Experiment runner: JSON config in, per-seed ledgers, a summary and a plot out.

Usage::

    python -m omedal --config experiment.json [--seed N] [--mode MODE] [--out DIR] [--plot]

Exit status is 0 on success, 1 for configuration errors and 2 for data errors.
``OMEDAL_OUT_DIR`` overrides the configured output directory (``--out`` wins
over both).
"""

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report
from .alloop import LoopConfig, full_data_baseline, run_experiment
from .data import DatasetPool, load_table, make_blobs, stratified_split
from .exceptions import ConfigError, DataError
from .learner import LearnerConfig
from .sampler import SamplerConfig

OUT_DIR_ENV = "OMEDAL_OUT_DIR"
_LEARNER_FIELDS = [f.name for f in dataclasses.fields(LearnerConfig) if f.name not in ("input_dim", "n_classes", "seed")]
_LOOP_FIELDS = [f.name for f in dataclasses.fields(LoopConfig) if f.name not in ("mode", "seed")]


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "blobs"
    n: int = 1000
    dim: int = 20
    n_classes: int = 4
    separation: float = 3.0
    clusters_per_class: int = 3
    cluster_std: float = 1.0
    class_weights: tuple | None = None
    seed: int = 0
    path: str | None = None
    format: str = "csv"
    labels_path: str | None = None
    test_fraction: float = 0.2

    def __post_init__(self):
        if self.kind not in ("blobs", "file"):
            raise ConfigError("dataset.kind must be 'blobs' or 'file'", key="dataset.kind")
        if self.kind == "file" and not self.path:
            raise ConfigError("file dataset needs a path", key="dataset.path")
        if self.class_weights is not None:
            object.__setattr__(self, "class_weights", tuple(float(w) for w in self.class_weights))
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)", key="dataset.test_fraction")

    def load(self):
        if self.kind == "blobs":
            return make_blobs(self.n, self.dim, self.n_classes, self.separation, self.class_weights,
                              self.seed, self.clusters_per_class, self.cluster_std)
        return load_table(self.path, self.format, self.labels_path)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    modes: tuple = ("omedal",)
    learner: dict = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    mode_overrides: dict = field(default_factory=dict)
    n_seeds: int = 1
    seed: int = 0
    baseline_epochs: int = 80
    out_dir: str = "runs"
    emit_plot: bool = False
    wall_time: bool = False

    def loop_for(self, mode, seed):
        return dataclasses.replace(self.loop, mode=mode, seed=seed, **self.mode_overrides.get(mode, {}))

    def learner_for(self, input_dim, n_classes):
        return LearnerConfig(input_dim=input_dim, n_classes=n_classes, **self.learner)


def _section(doc, key):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be an object", key=key)
    return value


def _build(cls, values, allowed, prefix):
    unknown = set(values) - set(allowed)
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key {prefix}.{bad}", key=bad)
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"bad {prefix} section: {exc}", key=prefix) from None


def _loop_values(values, prefix):
    values = dict(values)
    # naming one schedule switches the other off
    if "epochs_per_iter" in values and "patience" not in values:
        values["patience"] = None
    if "patience" in values and "epochs_per_iter" not in values:
        values["epochs_per_iter"] = None
    unknown = set(values) - set(_LOOP_FIELDS)
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key {prefix}.{bad}", key=bad)
    return values


def config_from_dict(doc):
    """Validate a decoded config document and apply defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", key="config")
    known = {"dataset", "modes", "mode", "learner", "sampler", "loop", "mode_overrides", "n_seeds", "seed",
             "baseline_epochs", "out_dir", "emit_plot", "wall_time"}
    unknown = set(doc) - known
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key {bad}", key=bad)
    if "dataset" not in doc:
        raise ConfigError("missing dataset", key="dataset")
    dataset = _build(DatasetSpec, _section(doc, "dataset"), [f.name for f in dataclasses.fields(DatasetSpec)],
                     "dataset")

    loop_doc = dict(_section(doc, "loop"))
    modes = doc.get("modes", loop_doc.pop("mode", doc.get("mode", "omedal")))
    modes = (modes,) if isinstance(modes, str) else tuple(modes)
    if not modes:
        raise ConfigError("at least one mode is required", key="mode")
    loop_doc.pop("seed", None)
    loop_values = _loop_values(loop_doc, "loop")
    loop = LoopConfig(mode=modes[0], **loop_values)
    for m in modes:
        LoopConfig(**{**dataclasses.asdict(loop), "mode": m})

    overrides = {}
    for m, vals in _section(doc, "mode_overrides").items():
        vals = _loop_values(vals, f"mode_overrides.{m}")
        dataclasses.replace(loop, mode=m, **vals)
        overrides[m] = vals

    learner = dict(_section(doc, "learner"))
    unknown = set(learner) - set(_LEARNER_FIELDS)
    if unknown:
        bad = sorted(unknown)[0]
        raise ConfigError(f"unknown key learner.{bad}", key=bad)
    if "hidden_dims" in learner:
        learner["hidden_dims"] = tuple(learner["hidden_dims"])
    defaults = LearnerConfig(input_dim=1)
    learner = {k: learner.get(k, getattr(defaults, k)) for k in _LEARNER_FIELDS}
    LearnerConfig(input_dim=1, **learner)

    sampler = _build(SamplerConfig, _section(doc, "sampler"), ["M", "ell"], "sampler")

    n_seeds = doc.get("n_seeds", 1)
    if not isinstance(n_seeds, int) or n_seeds < 1:
        raise ConfigError("n_seeds must be a positive integer", key="n_seeds")
    baseline_epochs = doc.get("baseline_epochs", 80)
    if not isinstance(baseline_epochs, int) or baseline_epochs < 1:
        raise ConfigError("baseline_epochs must be a positive integer", key="baseline_epochs")
    return ExperimentConfig(
        dataset=dataset, modes=modes, learner=learner, sampler=sampler, loop=loop,
        mode_overrides=overrides, n_seeds=n_seeds, seed=int(doc.get("seed", 0)),
        baseline_epochs=baseline_epochs, out_dir=str(doc.get("out_dir", "runs")),
        emit_plot=bool(doc.get("emit_plot", False)), wall_time=bool(doc.get("wall_time", False)),
    )


def parse_config(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", key="config") from None
    return config_from_dict(doc)


def config_to_dict(config):
    loop = {k: getattr(config.loop, k) for k in _LOOP_FIELDS}
    learner = dict(config.learner)
    learner["hidden_dims"] = list(learner["hidden_dims"])
    dataset = dataclasses.asdict(config.dataset)
    if dataset["class_weights"] is not None:
        dataset["class_weights"] = list(dataset["class_weights"])
    return dict(dataset=dataset, modes=list(config.modes), learner=learner,
                sampler=dataclasses.asdict(config.sampler), loop=loop,
                mode_overrides={m: dict(v) for m, v in config.mode_overrides.items()},
                n_seeds=config.n_seeds, seed=config.seed, baseline_epochs=config.baseline_epochs,
                out_dir=config.out_dir, emit_plot=config.emit_plot, wall_time=config.wall_time)


def serialize_config(config):
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"


def run(config):
    """Run every (mode, seed) pair; returns the paths written."""
    X, y = config.dataset.load()
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise DataError("dataset has a single class")
    learner_config = config.learner_for(X.shape[1], n_classes)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(serialize_config(config), encoding="utf-8")

    results, written = [], []
    baselines = []
    for seed in range(config.seed, config.seed + config.n_seeds):
        pool_idx, test_idx = stratified_split(y, config.dataset.test_fraction, seed)
        pool = DatasetPool(X, y, test_idx)
        baseline, _ = full_data_baseline(learner_config, X[pool_idx], y[pool_idx], X[test_idx], y[test_idx],
                                         config.baseline_epochs, seed)
        baselines.append(baseline)
        for mode in config.modes:
            ledger = run_experiment(config.loop_for(mode, seed), config.sampler, learner_config, pool)
            path = out / report.ledger_filename(mode, seed)
            report.write_ledger(path, ledger, wall_time=config.wall_time)
            written.append(path)
            results.append((mode, seed, ledger, baseline))
    summary = out / "summary.csv"
    report.write_summary(summary, report.summary_rows(results))
    written.append(summary)
    if config.emit_plot:
        written.append(report.emit_plot([p for p in written if p.name.startswith("ledger_")],
                                        out / "learning_curves.svg", float(np.mean(baselines))))
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(prog="omedal", description=__doc__.split("\n")[0])
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, help="first seed (overrides config)")
    parser.add_argument("--mode", help="run only this mode (overrides config)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--plot", action="store_true", help="also write learning_curves.svg")
    args = parser.parse_args(argv)

    try:
        config = parse_config(Path(args.config).read_text(encoding="utf-8"))
        updates = {}
        if args.seed is not None:
            updates["seed"] = args.seed
        if args.mode is not None:
            LoopConfig(**{**dataclasses.asdict(config.loop), "mode": args.mode})
            updates["modes"] = (args.mode,)
        out_dir = args.out or os.environ.get(OUT_DIR_ENV)
        if out_dir:
            updates["out_dir"] = out_dir
        if args.plot:
            updates["emit_plot"] = True
        config = dataclasses.replace(config, **updates)
    except ConfigError as exc:
        print(f"omedal: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"omedal: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        written = run(config)
    except ConfigError as exc:
        print(f"omedal: config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"omedal: data error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
