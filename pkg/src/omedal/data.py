"""Dataset pools, synthetic data, file loaders and the simulated labeling oracle."""

import csv
import math
import struct
import warnings

import numpy as np

from .exceptions import ConfigError, DataError, ParseError, PreconditionError, ShapeError


def largest_remainder(total, weights):
    """Integer allocation of ``total`` proportional to ``weights`` summing exactly to ``total``.

    Leftover units go to the largest fractional parts, lowest position first on ties.
    """
    w = np.asarray(weights, dtype=np.float64)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(np.int64)
    short = int(total - counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def make_blobs(n, dim, n_classes=2, separation=3.0, class_weights=None, seed=0,
               clusters_per_class=1, cluster_std=1.0):
    """Gaussian clusters with exact per-class counts.

    Cluster centres are random directions scaled to length ``separation``; with
    ``separation=0`` every class is drawn from the same distribution. With
    ``clusters_per_class > 1`` each class is a mixture of that many equally
    weighted clusters. Returns ``(X, y)`` with rows ordered by a seeded shuffle.
    """
    if class_weights is None:
        class_weights = np.full(n_classes, 1.0 / n_classes)
    w = np.asarray(class_weights, dtype=np.float64)
    if w.shape != (n_classes,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ConfigError("class_weights must be n_classes nonnegative values summing to 1",
                          key="class_weights")
    if n < n_classes or dim < 1 or n_classes < 2 or clusters_per_class < 1:
        raise ConfigError("need n >= n_classes >= 2, dim >= 1, clusters_per_class >= 1", key="n")
    rng = np.random.default_rng(seed)
    counts = largest_remainder(n, w)
    n_centres = n_classes * clusters_per_class
    centres = rng.standard_normal((n_centres, dim))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    centres *= separation
    X, y = [], []
    for k, count in enumerate(counts):
        per_cluster = largest_remainder(count, np.ones(clusters_per_class))
        for j, m in enumerate(per_cluster):
            c = centres[k * clusters_per_class + j]
            X.append(c + cluster_std * rng.standard_normal((m, dim)))
            y.append(np.full(m, k))
    X = np.vstack(X)
    y = np.concatenate(y).astype(np.int64)
    order = rng.permutation(n)
    return X[order], y[order]


def minmax_scale(X):
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    return (X - lo) / span


def _load_delimited(path):
    rows, labels = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError(f"{path}:{lineno}: need at least one feature and a label", lineno)
            elif len(row) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} columns, found {len(row)}", lineno)
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}", lineno) from None
            label = values[-1]
            if label != int(label) or label < 0:
                raise ParseError(f"{path}:{lineno}: label must be a nonnegative integer", lineno)
            rows.append(values[:-1])
            labels.append(int(label))
    if not rows:
        raise ParseError(f"{path}: no data rows", 0)
    X = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite feature values")
    return X, np.asarray(labels, dtype=np.int64)


def read_idx(path):
    """Read an IDX file holding unsigned bytes. Returns an ``np.uint8`` array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4:
        raise ParseError(f"{path}: truncated magic number at byte 0", 0)
    zero, dtype_code, ndim = struct.unpack(">HBB", data[:4])
    if zero != 0 or dtype_code != 0x08:
        raise ParseError(f"{path}: bad magic {data[:4].hex()} at byte 0 (only unsigned-byte IDX supported)", 0)
    header_end = 4 + 4 * ndim
    if len(data) < header_end:
        raise ParseError(f"{path}: truncated dimension header at byte {len(data)}", len(data))
    dims = struct.unpack(f">{ndim}I", data[4:header_end])
    expected = math.prod(dims)
    payload = len(data) - header_end
    if payload != expected:
        record = math.prod(dims[1:]) if ndim > 1 else 1
        raise ParseError(
            f"{path}: header declares {dims[0]} records ({expected} bytes) but payload has "
            f"{payload} bytes ({payload // max(record, 1)} records); mismatch at byte {header_end + min(payload, expected)}",
            header_end + min(payload, expected),
        )
    return np.frombuffer(data, dtype=np.uint8, offset=header_end).reshape(dims)


def write_idx(path, array):
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise DataError("write_idx only writes unsigned bytes")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">HBB", 0, 0x08, a.ndim))
        fh.write(struct.pack(f">{a.ndim}I", *a.shape))
        fh.write(a.tobytes())


def load_table(path, format="csv", labels_path=None):
    """Load ``(X, y)`` from a delimited text file or an IDX image/label pair.

    Delimited text: comma separated, no header, label in the last column;
    features are min-max scaled per column. IDX: pixel bytes divided by 255,
    images flattened to one row each; ``labels_path`` names the label file.
    """
    if format in ("csv", "delimited", "delimited-text"):
        X, y = _load_delimited(path)
        return minmax_scale(X), y
    if format in ("idx", "idx-images"):
        if labels_path is None:
            raise DataError("idx format needs labels_path")
        images = read_idx(path)
        labels = read_idx(labels_path)
        if labels.ndim != 1:
            raise ParseError(f"{labels_path}: label file must be one-dimensional", 3)
        if images.shape[0] != labels.shape[0]:
            raise ParseError(f"{path}: {images.shape[0]} images but {labels.shape[0]} labels", 4)
        X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
        return X, labels.astype(np.int64)
    raise ConfigError(f"unknown table format {format!r}", key="format")


def save_delimited(path, X, y):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row, label in zip(np.asarray(X, dtype=np.float64), np.asarray(y)):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def stratified_split(y, test_fraction, seed):
    """Split indices into ``(pool, test)`` preserving class proportions.

    The test part holds ``ceil(test_fraction * n)`` examples, shared among
    classes by largest remainder. Both index arrays are sorted.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError("test_fraction must lie in (0, 1)", key="test_fraction")
    y = np.asarray(y)
    n = len(y)
    classes, counts = np.unique(y, return_counts=True)
    n_test = math.ceil(round(test_fraction * n, 9))
    quotas = largest_remainder(n_test, counts)
    rng = np.random.default_rng(seed)
    pool, test = [], []
    for cls, count, quota in zip(classes, counts, quotas):
        members = rng.permutation(np.flatnonzero(y == cls))
        if quota == 0 or quota == count:
            warnings.warn(f"class {cls} has no examples in one side of the split", RuntimeWarning, stacklevel=2)
        test.append(members[:quota])
        pool.append(members[quota:])
    return np.sort(np.concatenate(pool)), np.sort(np.concatenate(test))


class DatasetPool:
    """Partition of a dataset into labeled (train), unlabeled (oracle), test and
    optional validation index sets.

    True labels of oracle examples are only released through :meth:`label`.
    """

    def __init__(self, X, y, test_idx, val_idx=(), labeled_idx=()):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ShapeError("X must be (n, d) and y must have n entries")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        self.X = X
        self._y = y
        self.n_classes = int(y.max()) + 1
        n = len(y)
        test = set(int(i) for i in test_idx)
        val = set(int(i) for i in val_idx)
        labeled = set(int(i) for i in labeled_idx)
        if test & val or test & labeled or val & labeled:
            raise ConfigError("test, validation and labeled index sets must be disjoint", key="partition")
        if any(not 0 <= i < n for i in test | val | labeled):
            raise ConfigError("index out of range", key="partition")
        self._test = np.array(sorted(test), dtype=np.int64)
        self._val = np.array(sorted(val), dtype=np.int64)
        self._labeled = sorted(labeled)
        self._oracle = set(range(n)) - test - val - labeled
        self.initial_size = len(self._labeled) + len(self._oracle)

    @classmethod
    def from_split(cls, X, y, test_fraction=0.2, seed=0):
        _, test = stratified_split(y, test_fraction, seed)
        return cls(X, y, test)

    def copy(self):
        other = object.__new__(DatasetPool)
        other.__dict__.update(self.__dict__)
        other._labeled = list(self._labeled)
        other._oracle = set(self._oracle)
        return other

    @property
    def labeled(self):
        """Labeled indices in the order they were labeled."""
        return np.array(self._labeled, dtype=np.int64)

    @property
    def unlabeled(self):
        return np.array(sorted(self._oracle), dtype=np.int64)

    @property
    def test(self):
        return self._test

    @property
    def validation(self):
        return self._val

    @property
    def n_labeled(self):
        return len(self._labeled)

    @property
    def n_unlabeled(self):
        return len(self._oracle)

    def label(self, indices):
        """Move ``indices`` from the oracle set to the labeled set, all or nothing."""
        idx = [int(i) for i in indices]
        if len(set(idx)) != len(idx):
            raise PreconditionError("duplicate indices in one label call")
        bad = [i for i in idx if i not in self._oracle]
        if bad:
            raise PreconditionError(f"indices not in the unlabeled set: {bad[:5]}")
        self._labeled.extend(idx)
        self._oracle.difference_update(idx)
        return self

    def labels_of(self, indices):
        """True labels, released only for labeled, test or validation examples."""
        idx = np.asarray(indices, dtype=np.int64)
        if any(int(i) in self._oracle for i in idx):
            raise PreconditionError("true labels of unlabeled examples are hidden")
        return self._y[idx]

    def initial_labels(self, k, rng):
        """Draw ``k`` oracle examples, stratified by class (one uniform draw when ``k == 1``)."""
        pool = self.unlabeled
        k = min(int(k), len(pool))
        if k <= 1:
            return [int(i) for i in rng.choice(pool, size=k, replace=False)]
        classes, counts = np.unique(self._y[pool], return_counts=True)
        quotas = largest_remainder(k, counts)
        picks = []
        for cls, quota in zip(classes, quotas):
            members = pool[self._y[pool] == cls]
            picks.extend(int(i) for i in rng.choice(members, size=quota, replace=False))
        return sorted(picks)

    def check_partition(self):
        lab, orc = set(self._labeled), self._oracle
        test, val = set(self._test.tolist()), set(self._val.tolist())
        assert not (lab & orc or lab & test or orc & test or val & (lab | orc | test))
        assert len(lab | orc | test | val) == len(self._y)
        assert len(lab) + len(orc) == self.initial_size
