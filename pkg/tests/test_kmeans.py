import numpy as np
import pytest

from lungpipe.learn import design_from_arrays, fit_kmeans, kmeans_accuracy
from lungpipe.learn.kmeans import kmeans_pp, lloyd, within_cluster_objective
from oracles import pairwise_w_double_sum


def test_n_equals_k():
    X = np.array([[0.0, 1.0], [2.0, 3.0], [5.0, -1.0]])
    m = fit_kmeans(design_from_arrays(X, [0, 1, 0]), K=3, seed=0, restarts=2)
    assert m.objective == 0.0
    assert sorted(m.labels_.tolist()) == [0, 1, 2]


@pytest.mark.parametrize("seed", range(10))
def test_double_sum_identity(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, 5))
    X = rng.normal(size=(40, 3)) * rng.uniform(0.1, 10)
    labels = rng.integers(0, K, 40)
    a = within_cluster_objective(X, labels, K)
    b = pairwise_w_double_sum(X, labels, K)
    assert a == pytest.approx(b, rel=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_lloyd_monotone(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(80, 2))
    X[:40] += 3
    K = int(rng.integers(2, 6))
    C, labels, hist, conv = lloyd(X, kmeans_pp(X, K, rng))
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    assert hist[-1] <= hist[0]
    assert conv


def test_assign_matches_recorded(rng):
    X = rng.normal(size=(100, 2))
    X[50:] += 8
    d = design_from_arrays(X, np.repeat([0, 1], 50))
    m = fit_kmeans(d, seed=1)
    assert np.array_equal(m.assign(d.X), m.labels_)
    assert kmeans_accuracy(m, d) == 1.0
    assert m.objective == pytest.approx(within_cluster_objective(d.X, m.labels_, 2))


def test_swap_invariance(rng):
    X = rng.normal(size=(60, 2))
    X[30:] += 2
    y = np.repeat([0, 1], 30)
    m = fit_kmeans(design_from_arrays(X, y), seed=2)
    m1 = kmeans_accuracy(m, design_from_arrays(X, y))
    m2 = kmeans_accuracy(m, design_from_arrays(X, 1 - y))
    assert m1 == m2


def test_random_labels_near_half():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(2000, 2))
    y = rng.integers(0, 2, 2000)
    d = design_from_arrays(X, y)
    assert abs(kmeans_accuracy(fit_kmeans(d, seed=0, restarts=3), d) - 0.5) <= 0.05


def test_deterministic_and_errors(rng):
    X = rng.normal(size=(30, 2))
    d = design_from_arrays(X, rng.integers(0, 2, 30))
    a, b = fit_kmeans(d, seed=4), fit_kmeans(d, seed=4)
    assert np.array_equal(a.centroids, b.centroids)
    with pytest.raises(ValueError):
        fit_kmeans(d, K=31)


def test_empty_cluster_reseeded():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    C0 = np.array([[0.1], [50.0], [60.0]])
    C, labels, hist, _ = lloyd(X, C0)
    assert sorted(set(labels.tolist())) == [0, 1, 2]
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
