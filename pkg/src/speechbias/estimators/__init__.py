from .normalize import StandardNormalizer, matrix_hash
from .svm import SmoSvmClassifier, rbf_kernel
from .grid import (
    SVM_C_GRID,
    SVM_GAMMA_GRID,
    GridSearchResult,
    fit_svm_with_grid,
    stratified_kfold_indices,
    svm_grid_search,
)
from .forest import RandomForestClassifier, splitmix64_stream
from .mlp import MlpClassifier, init_params, loss_and_grad, scores_from_params

__all__ = [
    "StandardNormalizer",
    "matrix_hash",
    "SmoSvmClassifier",
    "rbf_kernel",
    "SVM_C_GRID",
    "SVM_GAMMA_GRID",
    "GridSearchResult",
    "fit_svm_with_grid",
    "stratified_kfold_indices",
    "svm_grid_search",
    "RandomForestClassifier",
    "splitmix64_stream",
    "MlpClassifier",
    "init_params",
    "loss_and_grad",
    "scores_from_params",
]
