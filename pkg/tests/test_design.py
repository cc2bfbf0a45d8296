import numpy as np
import pytest
from hypothesis import given, strategies as st

from lungpipe.errors import DegenerateColumnError
from lungpipe.features import FeatureRecord, FeatureTable
from lungpipe.learn import design_from_arrays, standardize, stratified_folds


def test_standardize_column():
    d = design_from_arrays([[1.0], [2.0], [3.0]], [0, 1, 0])
    assert np.allclose(d.X[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)


def test_reapply_round_trip(rng):
    X = rng.normal(5, 3, size=(30, 4))
    d = design_from_arrays(X, rng.integers(0, 2, 30))
    assert np.allclose(d.standardization.apply(X), d.X, atol=1e-14)
    assert np.allclose(d.X.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(d.X.std(axis=0), 1, atol=1e-12)


def test_constant_column_named():
    with pytest.raises(DegenerateColumnError, match="b"):
        design_from_arrays([[1, 4], [2, 4], [3, 4]], [0, 1, 1], columns=("a", "b"))


def test_from_table():
    recs = [FeatureRecord(str(i), 10 + i, 20 + 2 * i, i * 0.5 + 1, 0.1 * i, 3 + i, 1 + i % 3, i % 2) for i in range(6)]
    d = standardize(FeatureTable(recs), ("area", "entropy"))
    assert d.columns == ("area", "entropy")
    assert d.y.tolist() == [0, 1, 0, 1, 0, 1]


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        design_from_arrays([[1.0], [np.nan]], [0, 1])
    with pytest.raises(ValueError):
        design_from_arrays([[1.0], [2.0]], [0, 2])
    with pytest.raises(ValueError):
        design_from_arrays([[1.0]], [0])


@given(st.lists(st.integers(0, 1), min_size=10, max_size=80), st.integers(2, 6), st.integers(0, 100))
def test_stratified_folds_balanced(y, folds, seed):
    y = np.array(y)
    f = stratified_folds(y, folds, seed)
    assert f.min() >= 0 and f.max() < folds
    for cls in (0, 1):
        counts = np.bincount(f[y == cls], minlength=folds)
        assert counts.max() - counts.min() <= 1
    assert np.array_equal(f, stratified_folds(y, folds, seed))
