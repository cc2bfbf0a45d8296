import numpy as np
import pytest

from lungpipe.errors import ConvergenceError
from lungpipe.learn import KernelSpec, design_from_arrays, fit_svm, kernel_eval, predict_svm, tune_svm
from lungpipe.learn.svm import dual_objective, smo
from oracles import svm_random_feasible


def kkt_gap(res, y, C):
    score = -y * res.gradient
    up = ((y > 0) & (res.alpha < C)) | ((y < 0) & (res.alpha > 0))
    low = ((y > 0) & (res.alpha > 0)) | ((y < 0) & (res.alpha < C))
    return score[up].max() - score[low].min()


def test_kernel_examples():
    assert kernel_eval(KernelSpec("inner-product"), (1, 2), (3, 4)) == 11
    for g in (0.01, 1.0, 50.0):
        assert kernel_eval(KernelSpec("radial", gamma=g), (0.3, -2), (0.3, -2)) == 1.0
    assert kernel_eval(KernelSpec("polynomial", degree=2), (1, 0), (1, 0)) == 4
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec("linear"), (1, 2), (1, 2, 3))


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("radial", gamma=0)
    with pytest.raises(ValueError):
        KernelSpec("polynomial", degree=0)
    with pytest.raises(ValueError):
        KernelSpec("sigmoid")


def clusters(seed, n=30, gap=4.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-gap / 2, 0.5, (n, 2)), rng.normal(gap / 2, 0.5, (n, 2))])
    return X, np.repeat([0, 1], n)


def test_separable_linear():
    X, y = clusters(0)
    d = design_from_arrays(X, y, standardize=False)
    m = fit_svm(d, KernelSpec("linear"), C=10.0)
    assert np.array_equal(predict_svm(m, X), y)
    f = m.decision_function(X)
    # margin boundary lies between the clusters
    assert f[y == 0].max() < 0 < f[y == 1].min()
    assert m.decision_function([[0.0, 0.0]])[0] == pytest.approx(0.0, abs=0.6)


@pytest.mark.parametrize("kind", ["linear", "radial", "polynomial"])
def test_dual_beats_random_feasible(kind):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(25, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=25) > 0).astype(int)
    y_pm = np.where(y == 1, 1.0, -1.0)
    spec = KernelSpec(kind, degree=2, gamma=0.5)
    K = spec.matrix(X, X)
    C = 1.0
    res = smo(K, y_pm, C)
    best = dual_objective(res.alpha, y_pm, K)[0]
    A = svm_random_feasible(rng, y_pm, C, 10_000)
    assert np.all(A >= 0) and np.all(A <= C)
    assert np.allclose(A @ y_pm, 0, atol=1e-9)
    assert best >= dual_objective(A, y_pm, K).max() - 1e-9


def test_kkt_and_constraints():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    y_pm = np.where(y == 1, 1.0, -1.0)
    K = KernelSpec("radial", gamma=1.0).matrix(X, X)
    C = 2.0
    res = smo(K, y_pm, C)
    assert np.all(res.alpha >= 0) and np.all(res.alpha <= C)
    assert abs(res.alpha @ y_pm) <= 1e-6
    assert kkt_gap(res, y_pm, C) < 1e-3
    # complementary slackness with slack xi_i = max(0, 1 - y_i f_i)
    f = K @ (res.alpha * y_pm) - res.rho
    margin = y_pm * f
    xi = np.maximum(0.0, 1.0 - margin)
    assert np.all(np.abs(res.alpha * (margin - 1 + xi)) <= 1e-2)
    free = (res.alpha > 1e-8) & (res.alpha < C - 1e-8)
    assert np.all(np.abs(margin[free] - 1) <= 1e-2)


def test_nonconvergence_reports_iterations():
    X, y = clusters(3)
    y_pm = np.where(y == 1, 1.0, -1.0)
    K = KernelSpec("linear").matrix(X, X)
    with pytest.raises(ConvergenceError) as ei:
        smo(K, y_pm, 1.0, tol=1e-12, max_iter=1)
    assert ei.value.iterations == 1


def test_fit_validation():
    X, y = clusters(4)
    d = design_from_arrays(X, y)
    with pytest.raises(ValueError):
        fit_svm(d, C=0)


def rings(seed, n=120):
    rng = np.random.default_rng(seed)
    r = np.concatenate([rng.uniform(0, 1, n), rng.uniform(2, 3, n)])
    t = rng.uniform(0, 2 * np.pi, 2 * n)
    X = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return X, np.repeat([0, 1], n)


def test_tune_rings_picks_unit_gamma():
    X, y = rings(0)
    d = design_from_arrays(X, y)
    res = tune_svm(d, [(1.0, 0.01), (1.0, 1.0), (1.0, 100.0)], folds=5, seed=0)
    assert res.gamma == 1.0
    accs = {row["gamma"]: row["cv_accuracy"] for row in res.table}
    assert accs[1.0] > accs[0.01] and accs[1.0] > accs[100.0]
    again = tune_svm(d, [(1.0, 0.01), (1.0, 1.0), (1.0, 100.0)], folds=5, seed=0)
    assert again.table == res.table


def test_tune_single_point_and_ties():
    X, y = clusters(5)
    d = design_from_arrays(X, y)
    one = tune_svm(d, [(3.0, 0.5)])
    assert (one.C, one.gamma) == (3.0, 0.5)
    tie = tune_svm(d, [(10.0, 1.0), (1.0, 2.0), (1.0, 1.0)])
    assert (tie.C, tie.gamma) == (1.0, 1.0)
    with pytest.raises(ValueError):
        tune_svm(d, [])
