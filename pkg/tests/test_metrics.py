import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omedal.exceptions import PreconditionError, ShapeError, UndefinedMetricError
from omedal.metrics import accuracy, auc, labels_to_reach
from oracles import brute_accuracy, brute_auc


def test_accuracy_examples():
    assert accuracy([1, 0, 2], [1, 0, 2]) == 1.0
    assert accuracy([0, 1, 0, 1], [0, 1, 1, 1]) == 0.75
    with pytest.raises(PreconditionError):
        accuracy([], [])
    with pytest.raises(ShapeError):
        accuracy([0, 1], [0])


def test_auc_examples():
    s = [0.9, 0.8, 0.3, 0.2]
    assert auc(s, [1, 1, 0, 0]) == 1.0
    assert auc(s, [1, 0, 1, 0]) == 0.75
    assert auc([0.4] * 4, [1, 0, 1, 0]) == 0.5
    with pytest.raises(UndefinedMetricError):
        auc(s, [1, 1, 1, 1])


scored_labels = st.integers(2, 100).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 6).map(lambda v: v / 6), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


@settings(max_examples=300)
@given(scored_labels)
def test_auc_equals_brute_force(data):
    scores, labels = data
    assert auc(scores, labels) == brute_auc(scores, labels)


@given(scored_labels)
def test_auc_invariant_under_increasing_transform(data):
    scores, labels = data
    s = np.asarray(scores)
    assert auc(np.exp(3 * s) - 7, labels) == auc(s, labels)


@settings(max_examples=300)
@given(st.integers(1, 100).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 3), min_size=n, max_size=n))))
def test_accuracy_equals_brute_force(data):
    pred, true = data
    assert accuracy(pred, true) == brute_accuracy(pred, true)


def test_labels_to_reach_examples():
    curve = [(0.1, 0.6), (0.3, 0.8), (0.5, 0.9)]
    assert labels_to_reach(curve, 0.8) == 0.3
    assert labels_to_reach(curve, 0.95) is None
    assert labels_to_reach(curve, 0.85) == 0.5


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_labels_to_reach_monotone_in_target(accs, t1, t2):
    curve = [(i / len(accs), a) for i, a in enumerate(accs)]
    lo, hi = sorted((t1, t2))
    a, b = labels_to_reach(curve, lo), labels_to_reach(curve, hi)
    if b is not None:
        assert a is not None and a <= b
