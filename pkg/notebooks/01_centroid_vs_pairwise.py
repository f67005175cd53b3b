"""
Centroid distance versus mean pairwise distance
===============================================

The selector scores a candidate by its distance to the centroid of the
labeled embeddings. This script checks how that ordering relates to the
two brute-force scores it is often described as replacing.
"""

import numpy as np

from omedal.sampler import score_centroid, score_pairwise, score_pairwise_sq, select_batch

# A two-point labeled set and two candidates.
train = np.array([[-1.0, 0.0], [1.0, 0.0]])
y = train.mean(axis=0)
for name, c in [("above", np.array([0.0, 1.5])), ("right", np.array([1.7, 0.0]))]:
    print(f"{name:>5}: centroid {score_centroid(c, y):.3f}  "
          f"mean dist {score_pairwise(c, train):.3f}  mean sq dist {score_pairwise_sq(c, train):.3f}")

# "right" is further from the centroid, yet "above" has the larger mean
# Euclidean distance. Mean squared distance agrees with the centroid because
# it equals ||c - y||^2 plus a constant that does not depend on c.

# How often do the full greedy sequences disagree on Gaussian data?
rng = np.random.default_rng(0)
trials, differ_eu, differ_sq = 300, 0, 0
for _ in range(trials):
    N, M, d = rng.integers(1, 100), rng.integers(2, 30), rng.integers(2, 32)
    T, C = rng.standard_normal((N, d)), rng.standard_normal((M, d))
    idx, ell = np.arange(M), int(rng.integers(1, M + 1))
    fast = select_batch(T, C, idx, ell).indices
    differ_eu += fast != select_batch(T, C, idx, ell, scorer="pairwise").indices
    differ_sq += fast != select_batch(T, C, idx, ell, scorer="pairwise_sq").indices
print(f"sequences differing from mean Euclidean: {differ_eu}/{trials}")
print(f"sequences differing from mean squared:   {differ_sq}/{trials}")

# The cost side is what motivates the centroid: one distance per candidate
# per pick instead of one per (candidate, labeled example) pair.
T, C = rng.standard_normal((1000, 16)), rng.standard_normal((50, 16))
for scorer in ("centroid", "pairwise"):
    sel = select_batch(T, C, np.arange(50), 20, scorer=scorer)
    print(f"{scorer:>9}: {sel.n_distance_evals} distance evaluations")
