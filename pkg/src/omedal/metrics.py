"""Evaluation metrics and learning-curve summaries."""

import numpy as np

from .exceptions import PreconditionError, ShapeError, UndefinedMetricError

_AUC_CHUNK = 2048


def accuracy(predicted, true):
    p = np.asarray(predicted)
    t = np.asarray(true)
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise PreconditionError("accuracy of an empty set is undefined")
    return float(np.mean(p == t))


def auc(scores, labels):
    """ROC AUC as the Mann-Whitney statistic, by exact pair counting.

    Each (positive, negative) pair scores 1 if the positive is ranked higher
    and 1/2 on a tie.
    """
    s = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels)
    if s.shape != lab.shape or s.ndim != 1:
        raise ShapeError("scores and labels must be 1-D of equal length")
    pos = s[lab == 1]
    neg = s[lab == 0]
    if len(pos) + len(neg) != len(s):
        raise UndefinedMetricError("labels must be binary 0/1")
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    wins = 0
    ties = 0
    for start in range(0, len(pos), _AUC_CHUNK):
        block = pos[start:start + _AUC_CHUNK, None]
        wins += int(np.count_nonzero(block > neg))
        ties += int(np.count_nonzero(block == neg))
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def labels_to_reach(curve, target):
    """Smallest fraction labeled at which accuracy is at least ``target``, else None.

    ``curve`` is a sequence of ``(pct_labeled, accuracy)`` sorted by the first item.
    """
    for pct, acc in curve:
        if acc >= target:
            return pct
    return None
