"""Entropy-filtered, centroid-distance active learning with online training."""

from .alloop import (LoopConfig, RunLedger, check_early_stop, full_data_baseline,
                     predicted_examples_processed, run_experiment)
from .data import DatasetPool, load_table, make_blobs, stratified_split
from .learner import Learner, LearnerConfig
from .metrics import accuracy, auc, labels_to_reach
from .sampler import SamplerConfig, Selection, select_batch

__version__ = "0.1.0"
