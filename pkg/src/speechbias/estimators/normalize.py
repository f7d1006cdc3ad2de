"""Per-dimension z-score normalization fitted on training data only."""

from __future__ import annotations

import hashlib

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


def matrix_hash(X: np.ndarray) -> str:
    """SHA-256 of a float64 C-order view of a matrix; used for leakage audits."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    return hashlib.sha256(X.tobytes()).hexdigest()


class StandardNormalizer(BaseEstimator, TransformerMixin):
    """Z-score each dimension with training-set mean and (population) std.

    Zero-variance dimensions transform to exactly 0. The fitted object
    records a hash of its training matrix so run artifacts can prove that
    test data never leaked into the fit.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ValueError("normalizer needs at least 2 training samples")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.fit_hash_ = matrix_hash(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.mean_.size:
            raise ValueError(
                f"expected {self.mean_.size} dimensions, got {X.shape[1]}"
            )
        centered = X - self.mean_
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(self.scale_ > 0, centered / self.scale_, 0.0)
        return out
