"""Binary RBF-kernel SVM trained with sequential minimal optimization.

The dual problem

    min_a  0.5 a' Q a - e' a    s.t.  y' a = 0,  0 <= a_i <= C,

with Q_ij = y_i y_j k(x_i, x_j) and k(x, z) = exp(-gamma ||x - z||^2), is
solved by repeatedly optimizing the maximal-violating pair: the KKT
violation is m(a) - M(a) where m = max_{i in I_up} -y_i grad_i and
M = min_{j in I_low} -y_j grad_j, and training stops once it drops below
``tol``.

Parameters
----------
C : float
    Box constraint on the dual variables.
gamma : float
    RBF kernel width, k(x, z) = exp(-gamma ||x - z||^2).
tol : float, optional (default: 1e-3)
    Stopping tolerance on the KKT violation m(a) - M(a).
max_iter : int, optional (default: 100000)
    Hard cap on pair updates.

Attributes
----------
support_vectors_ : (n_sv, d) array
    Training points with nonzero dual variables.
dual_coef_ : (n_sv,) array
    alpha_i * y_i for each support vector.
intercept_ : float
    Bias term of the decision function.
dual_objective_ : float
    Value of the maximized dual, sum(a) - 0.5 a' Q a.
kkt_violation_ : float
    Final m(a) - M(a).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..errors import NumericError


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise exp(-gamma ||a - b||^2), exact 0 distance on the diagonal."""
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _as_pm1(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map labels to {-1, +1}; returns (y_pm1, classes sorted ascending)."""
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError(f"need exactly 2 classes, got {classes.tolist()}")
    return np.where(y == classes[1], 1.0, -1.0), classes


class SmoSvmClassifier(BaseEstimator, ClassifierMixin):
    __doc__ = __doc__

    def __init__(self, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3,
                 max_iter: int = 100_000):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64, ensure_all_finite=False)
        y = np.asarray(y).reshape(-1)
        if not np.all(np.isfinite(X)):
            raise NumericError("SVM training features contain NaN/Inf")
        y_pm, self.classes_ = _as_pm1(y)
        n = X.shape[0]

        K = rbf_kernel(X, X, self.gamma)
        alpha = np.zeros(n)
        # G_i = sum_l alpha_l y_l K_li (decision values without the bias).
        G = np.zeros(n)

        C = float(self.C)
        it = 0
        while True:
            E = G - y_pm
            up = ((y_pm > 0) & (alpha < C - 1e-12)) | ((y_pm < 0) & (alpha > 1e-12))
            low = ((y_pm > 0) & (alpha > 1e-12)) | ((y_pm < 0) & (alpha < C - 1e-12))
            # m = max over I_up of -E, M = min over I_low of -E
            neg_e = -E
            m_val = np.max(neg_e[up]) if np.any(up) else -np.inf
            M_val = np.min(neg_e[low]) if np.any(low) else np.inf
            violation = m_val - M_val
            if violation <= self.tol or it >= self.max_iter:
                break
            i = int(np.flatnonzero(up)[np.argmax(neg_e[up])])
            j = int(np.flatnonzero(low)[np.argmin(neg_e[low])])

            s = y_pm[i] * y_pm[j]
            if s > 0:
                L = max(0.0, alpha[i] + alpha[j] - C)
                H = min(C, alpha[i] + alpha[j])
            else:
                L = max(0.0, alpha[j] - alpha[i])
                H = min(C, C + alpha[j] - alpha[i])
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta <= 1e-12:
                eta = 1e-12
            a_j = alpha[j] + y_pm[j] * (E[i] - E[j]) / eta
            a_j = min(max(a_j, L), H)
            a_i = alpha[i] + s * (alpha[j] - a_j)
            d_i, d_j = a_i - alpha[i], a_j - alpha[j]
            if abs(d_i) < 1e-15 and abs(d_j) < 1e-15:
                break  # numerically stuck pair; violation is already tiny
            alpha[i], alpha[j] = a_i, a_j
            G += d_i * y_pm[i] * K[i] + d_j * y_pm[j] * K[j]
            it += 1

        # Bias: average y_k - G_k over free vectors, else the midpoint of
        # the interval the bound vectors leave feasible.
        free = (alpha > 1e-8) & (alpha < C - 1e-8)
        if np.any(free):
            b = float(np.mean(y_pm[free] - G[free]))
        else:
            b = float((m_val + M_val) / 2.0) if np.isfinite(m_val + M_val) else 0.0

        sv = alpha > 1e-12
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * y_pm[sv]
        self.alpha_ = alpha[sv]
        self.intercept_ = b
        self.n_iter_ = it
        self.kkt_violation_ = float(violation)
        self.dual_objective_ = float(np.sum(alpha) - 0.5 * np.dot(alpha * y_pm, G))
        self.alpha_y_sum_ = float(np.dot(alpha, y_pm))
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "support_vectors_")
        X = check_array(X, dtype=np.float64)
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        K = rbf_kernel(X, self.support_vectors_, self.gamma)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, self.classes_[1], self.classes_[0])
