import numpy as np
import pytest

from speechbias.estimators import StandardNormalizer, matrix_hash


def test_two_point_example():
    norm = StandardNormalizer().fit([[0.0], [2.0]])
    assert norm.mean_[0] == 1.0
    assert norm.scale_[0] == 1.0
    assert norm.transform([[1.0]])[0, 0] == 0.0


def test_constant_dimension_maps_to_zero():
    X = np.column_stack([np.full(10, 3.0), np.arange(10, dtype=float)])
    norm = StandardNormalizer().fit(X)
    out = norm.transform(X)
    assert np.all(out[:, 0] == 0.0)
    assert np.std(out[:, 1]) > 0


def test_training_set_becomes_standardized():
    rng = np.random.Generator(np.random.PCG64(21))
    X = rng.normal(loc=5.0, scale=3.0, size=(50, 7))
    out = StandardNormalizer().fit(X).transform(X)
    assert np.max(np.abs(out.mean(axis=0))) < 1e-12
    assert np.max(np.abs(out.std(axis=0) - 1.0)) < 1e-12


def test_needs_two_samples():
    with pytest.raises(ValueError):
        StandardNormalizer().fit([[1.0, 2.0]])


def test_fit_hash_matches_training_matrix():
    rng = np.random.Generator(np.random.PCG64(22))
    X = rng.normal(size=(8, 3))
    norm = StandardNormalizer().fit(X)
    assert norm.fit_hash_ == matrix_hash(X)
    assert norm.fit_hash_ != matrix_hash(X + 1.0)


def test_test_transform_reuses_train_statistics():
    train = np.array([[0.0], [2.0], [4.0]])
    test = np.array([[6.0]])
    norm = StandardNormalizer().fit(train)
    # (6 - 2) / std([0,2,4]) with population std = sqrt(8/3)
    expected = (6.0 - 2.0) / np.sqrt(8.0 / 3.0)
    assert np.isclose(norm.transform(test)[0, 0], expected)


def test_get_params_round_trip():
    norm = StandardNormalizer()
    assert norm.get_params() == {}
    assert type(norm)(**norm.get_params()) is not None
