"""Feed-forward binary classifier: 150/100/50 ReLU layers, sigmoid output.

Training minimizes binary cross-entropy with full-batch Adam
(lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8) for a fixed 1000 epochs and
no early stopping. Weights initialize from a scaled uniform fan-in scheme,
U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases at zero, all driven by one
seeded generator, so training is bit-deterministic for a fixed seed.

The loss and its analytic gradient are exposed as module functions over a
flat parameter vector so they can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..errors import NumericError

HIDDEN_SIZES = (150, 100, 50)


def layer_shapes(n_inputs: int, hidden=HIDDEN_SIZES) -> list[tuple[int, int]]:
    sizes = (n_inputs, *hidden, 1)
    return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]


def init_params(n_inputs: int, seed: int, hidden=HIDDEN_SIZES) -> np.ndarray:
    """Flat parameter vector: uniform fan-in weights, zero biases."""
    rng = np.random.Generator(np.random.PCG64(seed))
    parts = []
    for fan_in, fan_out in layer_shapes(n_inputs, hidden):
        bound = 1.0 / np.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def unflatten(params: np.ndarray, n_inputs: int, hidden=HIDDEN_SIZES):
    """Split a flat vector into [(W, b), ...] views."""
    out = []
    pos = 0
    for fan_in, fan_out in layer_shapes(n_inputs, hidden):
        W = params[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = params[pos : pos + fan_out]
        pos += fan_out
        out.append((W, b))
    if pos != params.size:
        raise ValueError(f"parameter vector has {params.size} entries, expected {pos}")
    return out


def _forward(params, X, hidden=HIDDEN_SIZES):
    layers = unflatten(params, X.shape[1], hidden)
    activations = [X]
    pre = []
    a = X
    for k, (W, b) in enumerate(layers):
        z = a @ W + b
        pre.append(z)
        a = np.maximum(z, 0.0) if k < len(layers) - 1 else z
        activations.append(a)
    return layers, activations, pre


def loss_and_grad(params: np.ndarray, X: np.ndarray, y01: np.ndarray,
                  hidden=HIDDEN_SIZES) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy over logits and its gradient (flat)."""
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.float64).reshape(-1, 1)
    layers, acts, pre = _forward(params, X, hidden)
    z = pre[-1]
    # log(1 + exp(-|z|)) + max(z, 0) - y z, numerically stable BCE on logits
    loss = float(np.mean(np.logaddexp(0.0, -np.abs(z)) + np.maximum(z, 0.0) - y01 * z))

    n = X.shape[0]
    sig = 1.0 / (1.0 + np.exp(-z))
    delta = (sig - y01) / n
    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        grads[k] = (acts[k].T @ delta, delta.sum(axis=0))
        if k > 0:
            delta = (delta @ W.T) * (pre[k - 1] > 0.0)
    flat = np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])
    return loss, flat


def scores_from_params(params: np.ndarray, X: np.ndarray, hidden=HIDDEN_SIZES) -> np.ndarray:
    _, acts, _ = _forward(params, np.asarray(X, dtype=np.float64), hidden)
    return (1.0 / (1.0 + np.exp(-acts[-1]))).reshape(-1)


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Three-hidden-layer perceptron scoring in (0, 1); threshold 0.5."""

    def __init__(self, hidden=HIDDEN_SIZES, learning_rate: float = 1e-3,
                 epochs: int = 1000, seed: int = 42,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64, ensure_all_finite=False)
        if not np.all(np.isfinite(X)):
            raise NumericError("MLP training features contain NaN/Inf")
        y = np.asarray(y).reshape(-1)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"need exactly 2 classes, got {self.classes_.tolist()}")
        y01 = (y == self.classes_[1]).astype(np.float64)

        params = init_params(X.shape[1], self.seed, self.hidden)
        m = np.zeros_like(params)
        v = np.zeros_like(params)
        losses = []
        for t in range(1, self.epochs + 1):
            loss, grad = loss_and_grad(params, X, y01, self.hidden)
            losses.append(loss)
            m = self.beta1 * m + (1 - self.beta1) * grad
            v = self.beta2 * v + (1 - self.beta2) * grad * grad
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            params = params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        if not np.all(np.isfinite(params)):
            raise NumericError("MLP training diverged to non-finite weights")
        self.params_ = params
        self.loss_history_ = np.array(losses)
        self.n_inputs_ = X.shape[1]
        return self

    def predict_score(self, X) -> np.ndarray:
        """Sigmoid outputs in (0, 1)."""
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_inputs_:
            raise ValueError(f"expected {self.n_inputs_} inputs, got {X.shape[1]}")
        return scores_from_params(self.params_, X, self.hidden)

    def predict(self, X) -> np.ndarray:
        scores = self.predict_score(X)
        return np.where(scores >= 0.5, self.classes_[1], self.classes_[0])
