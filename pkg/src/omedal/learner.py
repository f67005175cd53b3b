"""Feedforward classifier used both for prediction and as the embedding function.

The network is a stack of fully connected hidden layers followed by a softmax
output layer. The activations of the last hidden layer are the feature
embedding handed to the sampler.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError, ShapeError

_ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class LearnerConfig:
    input_dim: int
    hidden_dims: tuple = (32, 16)
    n_classes: int = 2
    learning_rate: float = 0.05
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 0.01
    batch_size: int = 48
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if int(self.input_dim) < 1:
            raise ConfigError("input_dim must be positive", key="input_dim")
        if not self.hidden_dims or any(h < 1 for h in self.hidden_dims):
            raise ConfigError("hidden_dims must be a nonempty list of positive ints", key="hidden_dims")
        if int(self.n_classes) < 2:
            raise ConfigError("n_classes must be >= 2", key="n_classes")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be nonnegative", key="learning_rate")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)", key="momentum")
        if not self.weight_decay >= 0:
            raise ConfigError("weight_decay must be nonnegative", key="weight_decay")
        if int(self.batch_size) < 1:
            raise ConfigError("batch_size must be >= 1", key="batch_size")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"activation must be one of {_ACTIVATIONS}", key="activation")

    @property
    def layer_dims(self):
        return (self.input_dim, *self.hidden_dims, self.n_classes)

    @property
    def embedding_dim(self):
        return self.hidden_dims[-1]


def glorot_uniform(fan_in, fan_out, rng):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class Learner:
    """MLP with hand-written forward/backward passes and SGD training.

    ``backprop_counter`` counts every example that has contributed to a weight
    update over the lifetime of the object. It is never reset, including by
    :meth:`reset`.
    """

    config: LearnerConfig
    weights: list = field(init=False)
    biases: list = field(init=False)
    backprop_counter: int = field(init=False, default=0)
    n_updates: int = field(init=False, default=0)

    def __post_init__(self):
        init_seq, train_seq = np.random.SeedSequence(self.config.seed).spawn(2)
        init_rng = np.random.default_rng(init_seq)
        dims = self.config.layer_dims
        self.weights = [glorot_uniform(a, b, init_rng) for a, b in zip(dims[:-1], dims[1:])]
        self.biases = [np.zeros(b) for b in dims[1:]]
        self._initial = tuple((w.copy(), b.copy()) for w, b in zip(self.weights, self.biases))
        for w, b in self._initial:
            w.flags.writeable = False
            b.flags.writeable = False
        self.rng = np.random.default_rng(train_seq)
        self._zero_velocity()

    def _zero_velocity(self):
        self._vel_w = [np.zeros_like(w) for w in self.weights]
        self._vel_b = [np.zeros_like(b) for b in self.biases]

    @property
    def initial_snapshot(self):
        """Read-only copy of the weights and biases drawn at construction."""
        return self._initial

    @property
    def n_layers(self):
        return len(self.weights)

    def _check_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.config.input_dim:
            raise ShapeError(f"expected batch of shape (n, {self.config.input_dim}), got {X.shape}")
        return X

    def _check_labels(self, y, n):
        y = np.asarray(y)
        if y.shape != (n,):
            raise ShapeError(f"expected {n} labels, got shape {y.shape}")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise DataError("labels must be integers")
            y = y.astype(np.int64)
        if n and (y.min() < 0 or y.max() >= self.config.n_classes):
            raise DataError(f"labels must lie in [0, {self.config.n_classes})")
        return y

    def _activate(self, z):
        if self.config.activation == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def _activation_grad(self, z, a):
        if self.config.activation == "tanh":
            return 1.0 - a * a
        return (z > 0).astype(np.float64)

    def _forward_cache(self, X):
        pre, acts = [], [X]
        h = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = h @ W + b
            h = self._activate(z)
            pre.append(z)
            acts.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return pre, acts, softmax(logits)

    def forward(self, X):
        """Return ``(probabilities, embeddings)`` for a batch of feature rows."""
        X = self._check_batch(X)
        _, acts, probs = self._forward_cache(X)
        return probs, acts[-1]

    def predict_proba(self, X):
        return self.forward(X)[0]

    def embed(self, X):
        return self.forward(X)[1]

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def loss(self, X, y):
        """Mean cross-entropy plus ``weight_decay / 2 * sum ||W||^2`` (biases excluded)."""
        X = self._check_batch(X)
        y = self._check_labels(y, X.shape[0])
        probs = self._forward_cache(X)[2]
        ce = -np.mean(np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300)))
        reg = 0.5 * self.config.weight_decay * sum(np.sum(W * W) for W in self.weights)
        return ce + reg

    def compute_gradients(self, X, y):
        """Gradients of :meth:`loss` as a list of ``(dW, db)`` pairs, one per layer."""
        X = self._check_batch(X)
        y = self._check_labels(y, X.shape[0])
        return self._gradients(X, y)[0]

    def _gradients(self, X, y):
        n = X.shape[0]
        pre, acts, probs = self._forward_cache(X)
        picked = probs[np.arange(n), y]
        ce = -np.mean(np.log(np.maximum(picked, 1e-300)))

        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grads = [None] * self.n_layers
        wd = self.config.weight_decay
        for layer in range(self.n_layers - 1, -1, -1):
            W = self.weights[layer]
            grads[layer] = (acts[layer].T @ delta + wd * W, delta.sum(axis=0))
            if layer > 0:
                delta = (delta @ W.T) * self._activation_grad(pre[layer - 1], acts[layer])
        return grads, ce

    def _apply(self, grads):
        cfg = self.config
        mu = cfg.momentum
        for i, (gw, gb) in enumerate(grads):
            for param, vel, g in ((self.weights[i], self._vel_w[i], gw), (self.biases[i], self._vel_b[i], gb)):
                vel *= mu
                vel += g
                step = g + mu * vel if cfg.nesterov else vel
                param -= cfg.learning_rate * step

    def train_epoch(self, X, y):
        """One pass of minibatch SGD over ``(X, y)`` in a freshly shuffled order.

        Returns the example-weighted mean cross-entropy seen during the pass, or
        NaN (with a warning) for an empty set.
        """
        X = self._check_batch(X)
        y = self._check_labels(y, X.shape[0])
        n = X.shape[0]
        if n == 0:
            warnings.warn("train_epoch called with no examples; nothing done", RuntimeWarning, stacklevel=2)
            return float("nan")
        b = self.config.batch_size
        order = self.rng.permutation(n)
        total = 0.0
        for start in range(0, n, b):
            idx = order[start:start + b]
            grads, ce = self._gradients(X[idx], y[idx])
            self._apply(grads)
            total += ce * len(idx)
            self.n_updates += 1
        self.backprop_counter += n
        return total / n

    def train_accuracy(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))

    def reset(self):
        """Restore the initial weights and clear momentum; the backprop counter is kept."""
        self.weights = [w.copy() for w, _ in self._initial]
        self.biases = [b.copy() for _, b in self._initial]
        self._zero_velocity()
        return self


def init_learner(config):
    return Learner(config)
