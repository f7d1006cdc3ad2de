"""Random forest of fully-grown Gini trees with bootstrap resampling.

The ensemble holds 100 trees. Each tree trains on a bootstrap resample,
considers floor(sqrt(d)) randomly drawn features at every node, and grows
until a node is pure or holds fewer than two samples. Per-tree randomness
comes from a splitmix64 stream over the forest seed, so training is
bit-deterministic for a fixed seed and input ordering.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

_MASK64 = (1 << 64) - 1


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """First ``count`` outputs of the splitmix64 generator seeded with ``seed``."""
    out = []
    state = seed & _MASK64
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "label")

    def __init__(self, label=None):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.label = label


def _best_split(X, y, feature_ids):
    """Lowest weighted Gini impurity over midpoint thresholds; None if no split."""
    n = y.size
    total_pos = int(y.sum())
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        valid = xs[:-1] < xs[1:]
        if not np.any(valid):
            continue
        pos_left = np.cumsum(ys)[:-1].astype(np.float64)
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        pos_right = total_pos - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        gini = n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)
        gini = np.where(valid, gini, np.inf)
        k = int(np.argmin(gini))
        if best is None or gini[k] < best[0]:
            best = (gini[k], int(f), 0.5 * (xs[k] + xs[k + 1]))
    if best is None:
        return None
    return best[1], best[2]


def _grow(X, y, rng, n_features):
    """Build one tree with an explicit stack (depth can reach n)."""
    root = _Node()
    stack = [(root, np.arange(y.size))]
    while stack:
        node, idx = stack.pop()
        y_node = y[idx]
        if y_node.size < 2 or np.all(y_node == y_node[0]):
            node.label = _majority(y_node)
            continue
        feature_ids = rng.choice(X.shape[1], size=n_features, replace=False)
        split = _best_split(X[idx], y_node, feature_ids)
        if split is None:
            node.label = _majority(y_node)
            continue
        f, thr = split
        mask = X[idx, f] <= thr
        if not mask.any() or mask.all():
            node.label = _majority(y_node)
            continue
        node.feature, node.threshold = f, thr
        node.left, node.right = _Node(), _Node()
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return root


def _majority(y) -> int:
    pos = int(y.sum())
    neg = y.size - pos
    return 1 if pos > neg else 0  # ties go to the negative class


def _tree_predict(node, X, out, idx):
    stack = [(node, idx)]
    while stack:
        nd, sel = stack.pop()
        if nd.label is not None:
            out[sel] = nd.label
            continue
        mask = X[sel, nd.feature] <= nd.threshold
        if mask.any():
            stack.append((nd.left, sel[mask]))
        if (~mask).any():
            stack.append((nd.right, sel[~mask]))


class RandomForestClassifier(BaseEstimator, ClassifierMixin):
    """Bootstrap ensemble of Gini decision trees with vote-fraction scores."""

    def __init__(self, n_trees: int = 100, seed: int = 42):
        self.n_trees = n_trees
        self.seed = seed

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y).reshape(-1)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"need exactly 2 classes, got {self.classes_.tolist()}")
        y01 = (y == self.classes_[1]).astype(np.int64)
        n, d = X.shape
        n_features = max(1, int(np.floor(np.sqrt(d))))
        self.trees_ = []
        for tree_seed in splitmix64_stream(self.seed, self.n_trees):
            rng = np.random.Generator(np.random.PCG64(tree_seed))
            boot = rng.integers(0, n, size=n)
            self.trees_.append(_grow(X[boot], y01[boot], rng, n_features))
        return self

    def predict_score(self, X) -> np.ndarray:
        """Fraction of trees voting for the positive class."""
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=np.float64)
        votes = np.zeros(X.shape[0])
        out = np.empty(X.shape[0], dtype=np.int64)
        idx = np.arange(X.shape[0])
        for tree in self.trees_:
            _tree_predict(tree, X, out, idx)
            votes += out
        return votes / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        scores = self.predict_score(X)
        return np.where(scores >= 0.5, self.classes_[1], self.classes_[0])
