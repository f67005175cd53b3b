"""Active-learning sample selection.

The MedAL selector narrows the unlabeled pool to the ``M`` highest-entropy
examples, then repeatedly labels the candidate whose embedding lies furthest
from the centroid of the labeled embeddings, folding each pick into the
centroid before the next one.

Two brute-force scorers are kept alongside the centroid path so selections
can be cross-checked:

* ``"pairwise"`` - mean Euclidean distance to every labeled embedding.
* ``"pairwise_sq"`` - mean *squared* Euclidean distance. This equals
  ``||f(x) - y||^2`` plus a term that does not depend on ``x``, so its
  ordering is exactly the centroid ordering.

The mean of plain Euclidean distances does not in general rank candidates the
same way as the centroid distance. Take labeled points (-1, 0) and (1, 0): the
candidate (0, 1.5) has centroid distance 1.5 and mean distance 1.80, while
(1.7, 0) has 1.7 and 1.7. ``pairwise`` and ``centroid`` can therefore pick
differently.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError, PreconditionError, ShapeError

TIE_RTOL = 1e-9
SCORERS = ("centroid", "pairwise", "pairwise_sq")


@dataclass(frozen=True)
class SamplerConfig:
    M: int = 50
    ell: int = 20

    def __post_init__(self):
        if int(self.M) < 1:
            raise ConfigError("M must be >= 1", key="M")
        if int(self.ell) < 1:
            raise ConfigError("ell must be >= 1", key="ell")


class DistanceCounter:
    """Counts Euclidean distance evaluations."""

    def __init__(self):
        self.n = 0

    def add(self, k):
        self.n += int(k)


@dataclass
class Selection:
    indices: list = field(default_factory=list)
    scores: list = field(default_factory=list)      # winning score of each pick
    score_traces: list = field(default_factory=list)  # all candidate scores at each pick
    centroids: list = field(default_factory=list)   # centroid used to score each pick
    n_distance_evals: int = 0

    def __len__(self):
        return len(self.indices)


def _check_distribution(p, atol=1e-6):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim not in (1, 2) or p.shape[-1] < 1:
        raise ShapeError(f"expected a probability vector or matrix, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DataError("probabilities must be finite and nonnegative")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > atol):
        raise DataError("probabilities must sum to 1")
    return p


def entropy(probs):
    """Row-wise predictive entropy in nats, with ``0 * log 0 = 0``."""
    p = _check_distribution(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return np.maximum(-terms.sum(axis=-1), 0.0)


def predictive_entropy(prob_row):
    p = np.asarray(prob_row, dtype=np.float64)
    if p.ndim != 1:
        raise ShapeError("predictive_entropy takes a single probability vector")
    return float(entropy(p))


def top_m(entropies, M):
    """Indices of the ``M`` largest entropies, largest first, lowest index on ties."""
    e = np.asarray(entropies, dtype=np.float64)
    order = np.argsort(-e, kind="stable")
    return order[:max(0, min(int(M), len(e)))]


def centroid(train_embs):
    E = np.asarray(train_embs, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] == 0:
        raise PreconditionError("centroid needs at least one embedding row")
    return E.mean(axis=0)


def _check_dims(v, other):
    if v.shape[-1] != other.shape[-1]:
        raise ShapeError(f"dimension mismatch: {v.shape[-1]} vs {other.shape[-1]}")


def score_pairwise(candidate_emb, train_embs, counter=None):
    """Mean Euclidean distance from one candidate to every labeled embedding."""
    c = np.asarray(candidate_emb, dtype=np.float64)
    T = np.atleast_2d(np.asarray(train_embs, dtype=np.float64))
    _check_dims(c, T)
    if counter is not None:
        counter.add(T.shape[0])
    return float(np.mean(np.sqrt(np.sum((T - c) ** 2, axis=1))))


def score_pairwise_sq(candidate_emb, train_embs, counter=None):
    c = np.asarray(candidate_emb, dtype=np.float64)
    T = np.atleast_2d(np.asarray(train_embs, dtype=np.float64))
    _check_dims(c, T)
    if counter is not None:
        counter.add(T.shape[0])
    return float(np.mean(np.sum((T - c) ** 2, axis=1)))


def score_centroid(candidate_emb, y, counter=None):
    c = np.asarray(candidate_emb, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_dims(c, y)
    if counter is not None:
        counter.add(1)
    return float(np.sqrt(np.sum((c - y) ** 2)))


def argmax_lowest_index(scores, indices, rtol=TIE_RTOL):
    """Position of the best score; scores within ``rtol`` of the best tie and the
    lowest original index among them wins."""
    scores = np.asarray(scores, dtype=np.float64)
    best = scores.max()
    tied = np.flatnonzero(scores >= best - rtol * abs(best))
    return int(tied[np.argmin(np.asarray(indices)[tied])])


def select_batch(train_embs, candidate_embs, candidate_indices, n_picks, scorer="centroid"):
    """Pick up to ``n_picks`` candidates one at a time, treating each pick as
    labeled before scoring the next.

    ``candidate_indices`` are the original pool indices of the rows of
    ``candidate_embs``; they are what the returned :class:`Selection` holds and
    what ties are broken on.
    """
    if scorer not in SCORERS:
        raise ValueError(f"scorer must be one of {SCORERS}")
    C = np.asarray(candidate_embs, dtype=np.float64)
    T = np.asarray(train_embs, dtype=np.float64)
    cand_idx = np.asarray(candidate_indices)
    if C.ndim != 2 or len(cand_idx) != C.shape[0]:
        raise ShapeError("candidate_embs must be 2-D with one row per candidate index")
    sel = Selection()
    if C.shape[0] == 0 or n_picks < 1:
        return sel
    if T.ndim != 2 or T.shape[0] == 0:
        raise PreconditionError("select_batch needs at least one labeled embedding")
    _check_dims(C, T)

    counter = DistanceCounter()
    remaining = list(range(C.shape[0]))
    n = T.shape[0]
    y = T.mean(axis=0)
    labeled = [T]
    for _ in range(min(int(n_picks), C.shape[0])):
        if scorer == "centroid":
            scores = [score_centroid(C[r], y, counter) for r in remaining]
        else:
            pool = np.vstack(labeled)
            score = score_pairwise if scorer == "pairwise" else score_pairwise_sq
            scores = [score(C[r], pool, counter) for r in remaining]
        k = argmax_lowest_index(scores, cand_idx[remaining])
        row = remaining.pop(k)
        sel.indices.append(int(cand_idx[row]))
        sel.scores.append(scores[k])
        sel.score_traces.append(np.asarray(scores))
        sel.centroids.append(y.copy())
        y = y + (C[row] - y) / (n + 1)
        n += 1
        labeled.append(C[row][None, :])
    sel.n_distance_evals = counter.n
    return sel


def medal_select(probs, embs, pool_indices, train_embs, config, scorer="centroid"):
    """Entropy filter to the top ``M`` then distance-based selection of ``ell``.

    ``probs`` and ``embs`` are rows for the unlabeled examples listed in
    ``pool_indices``.
    """
    pool_indices = np.asarray(pool_indices)
    cand = top_m(entropy(probs), config.M)
    return select_batch(train_embs, np.asarray(embs)[cand], pool_indices[cand], config.ell, scorer)


def random_select(pool_indices, ell, rng):
    pool_indices = np.asarray(pool_indices)
    k = min(int(ell), len(pool_indices))
    return [int(i) for i in rng.choice(pool_indices, size=k, replace=False)]


def uncertainty_select(pool_probs, ell, pool_indices=None):
    """The ``ell`` rows with highest predictive entropy, lowest index on ties.

    Returned as positions into ``pool_probs`` unless ``pool_indices`` is given.
    """
    picks = top_m(entropy(pool_probs), ell)
    if pool_indices is not None:
        picks = np.asarray(pool_indices)[picks]
    return [int(i) for i in picks]


def centroid_eval_count(M, ell):
    """Distance evaluations made by the centroid path for one batch."""
    return sum(M - k for k in range(min(ell, M)))


def pairwise_eval_count(M, ell, N):
    return sum((M - k) * (N + k) for k in range(min(ell, M)))


def max_entropy(n_classes):
    return math.log(n_classes)
