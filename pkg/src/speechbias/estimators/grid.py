"""Stratified k-fold utilities and the SVM hyperparameter grid search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .svm import SmoSvmClassifier

SVM_C_GRID = (1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3)
SVM_GAMMA_GRID = (1e0, 1e-1, 1e-2, 1e-3, 1e-4)


def stratified_kfold_indices(y, n_folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic stratified folds: shuffle within class, deal round-robin."""
    y = np.asarray(y).reshape(-1)
    rng = np.random.Generator(np.random.PCG64(seed))
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for value in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == value)
        if idx.size < n_folds:
            raise DataError(
                f"class {value} has {idx.size} samples; cannot form {n_folds} folds"
            )
        order = idx[rng.permutation(idx.size)]
        for pos, sample in enumerate(order):
            folds[pos % n_folds].append(int(sample))
    out = []
    all_idx = np.arange(y.size)
    for fold in folds:
        test = np.sort(np.array(fold, dtype=int))
        train = np.setdiff1d(all_idx, test)
        out.append((train, test))
    return out


@dataclass(frozen=True)
class GridSearchResult:
    best_c: float
    best_gamma: float
    cv_accuracy: float
    table: tuple  # ((C, gamma, accuracy), ...) in evaluation order


def svm_grid_search(X, y, seed: int, c_grid=SVM_C_GRID, gamma_grid=SVM_GAMMA_GRID,
                    n_folds: int = 5, tol: float = 1e-3) -> GridSearchResult:
    """Exhaustive grid search by stratified CV accuracy.

    Cells are evaluated row-major (C outer, gamma inner) and ties keep the
    first cell seen, so the selection is fully deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    folds = stratified_kfold_indices(y, n_folds, seed)
    best = None
    table = []
    for C in c_grid:
        for gamma in gamma_grid:
            correct = 0
            for train_idx, test_idx in folds:
                model = SmoSvmClassifier(C=C, gamma=gamma, tol=tol)
                model.fit(X[train_idx], y[train_idx])
                correct += int(np.sum(model.predict(X[test_idx]) == y[test_idx]))
            acc = correct / y.size
            table.append((C, gamma, acc))
            if best is None or acc > best[2]:
                best = (C, gamma, acc)
    return GridSearchResult(best[0], best[1], best[2], tuple(table))


def fit_svm_with_grid(X, y, seed: int, tol: float = 1e-3):
    """Grid-search then refit one final model on all the training data."""
    result = svm_grid_search(X, y, seed, tol=tol)
    model = SmoSvmClassifier(C=result.best_c, gamma=result.best_gamma, tol=tol)
    model.fit(X, y)
    return model, result
