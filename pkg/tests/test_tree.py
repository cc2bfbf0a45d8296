import numpy as np
import pytest

from lungpipe.learn import design_from_arrays, fit_forest, fit_tree, prune_tree
from lungpipe.learn.tree import TreeNode, cost_complexity_path, gini, grow_tree, is_subtree


def walk(node):
    yield node
    if not node.is_leaf:
        yield from walk(node.left)
        yield from walk(node.right)


def test_gini():
    assert gini((5, 5)) == 0.5
    assert gini((3, 0)) == 0.0


def test_pure_labels_single_leaf(rng):
    m = fit_tree(design_from_arrays(rng.normal(size=(20, 2)), np.ones(20, int)))
    assert m.root.is_leaf and m.root.leaves() == 1


def test_xor_depth_two():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).repeat(5, axis=0)
    y = np.array([0, 1, 1, 0]).repeat(5)
    # balanced XOR: no single split lowers impurity, so the greedy rule stops
    assert fit_tree(design_from_arrays(X, y), min_leaf=1).root.is_leaf
    # unequal group sizes give the first split a strict gain; the second
    # level then separates each side perfectly
    sizes = (10, 5, 5, 2)
    X = np.repeat([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], sizes, axis=0)
    y = np.repeat([0, 1, 1, 0], sizes)
    m = fit_tree(design_from_arrays(X, y), min_leaf=1)
    assert m.root.depth() == 2
    assert np.array_equal(m.predict(X), y)


def test_splits_reduce_impurity(rng):
    X = rng.normal(size=(150, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    m = fit_tree(design_from_arrays(X, y), min_leaf=3)
    for node in walk(m.root):
        if not node.is_leaf:
            n = node.n
            child = (node.left.n * gini(node.left.counts) + node.right.n * gini(node.right.counts)) / n
            assert child < gini(node.counts)
            assert node.left.n >= 3 and node.right.n >= 3


def test_leaf_proportions(rng):
    X = rng.normal(size=(60, 2))
    y = (X[:, 0] > 0).astype(int)
    m = fit_tree(design_from_arrays(X, y))
    props = m.proportions(X)
    assert np.allclose(props.sum(axis=1), 1.0)


def noise_collapse_rate(runs=40, n=120, min_leaf=7):
    collapsed = 0
    for seed in range(runs):
        rng = np.random.default_rng(1000 + seed)
        X = rng.normal(size=(n, 3))
        y = rng.integers(0, 2, n)
        d = design_from_arrays(X, y)
        collapsed += prune_tree(fit_tree(d, min_leaf=min_leaf), d, folds=10, seed=seed).root.is_leaf
    return collapsed / runs


@pytest.fixture(scope="module")
def collapse_rate():
    return noise_collapse_rate()


def test_noise_mostly_prunes_to_root(collapse_rate):
    # measured 0.8-0.875 for this configuration
    assert collapse_rate >= 0.75


@pytest.mark.xfail(reason="one-SE rule keeps a small tree on ~15-25% of pure-noise runs", strict=False)
def test_noise_prunes_to_root_ninety_percent(collapse_rate):
    assert collapse_rate >= 0.9


def test_root_candidate_is_majority_vote():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 2))
    y = rng.integers(0, 2, 100)
    d = design_from_arrays(X, y)
    table = prune_tree(fit_tree(d, min_leaf=5), d, folds=10, seed=0).cv_table
    # stratified folds: every fold's majority is the global majority
    assert table[-1]["leaves"] == 1
    assert table[-1]["cv_error"] == pytest.approx(min(y.mean(), 1 - y.mean()))


def test_pruned_is_subtree(rng):
    X = rng.normal(size=(200, 3))
    y = ((X[:, 0] > 0) ^ (rng.random(200) < 0.1)).astype(int)
    d = design_from_arrays(X, y)
    full = fit_tree(d, min_leaf=2)
    pruned = prune_tree(full, d, folds=5, seed=1)
    assert is_subtree(pruned.root, full.root)
    assert pruned.root.leaves() <= full.root.leaves()
    assert pruned.cv_table
    path = cost_complexity_path(full.root)
    alphas = [a for a, _ in path]
    assert alphas == sorted(alphas)
    assert path[-1][1].is_leaf


def test_single_leaf_prune_unchanged():
    d = design_from_arrays(np.arange(10.0), np.ones(10, int))
    m = fit_tree(d, min_leaf=5)
    assert m.root.is_leaf
    assert prune_tree(m, d).root.to_dict() == m.root.to_dict()


def test_min_leaf_validation(rng):
    with pytest.raises(ValueError):
        fit_tree(design_from_arrays(rng.normal(size=(6, 2)), [0, 1] * 3), min_leaf=4)


def test_node_round_trip(rng):
    X = rng.normal(size=(50, 2))
    root = grow_tree(X, (X[:, 0] > 0).astype(int), 2)
    assert TreeNode.from_dict(root.to_dict()).to_dict() == root.to_dict()


def test_degenerate_forest_equals_tree(rng):
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] + 0.5 * X[:, 2] > 0).astype(int)
    d = design_from_arrays(X, y)
    t = fit_tree(d, min_leaf=1)
    f = fit_forest(d, trees=1, max_features=3, bootstrap=False, min_leaf=1)
    Q = rng.normal(size=(200, 3))
    assert np.array_equal(t.predict(Q), f.predict(Q))


def test_forest_deterministic(rng):
    X = rng.normal(size=(80, 4))
    y = (X[:, 1] > 0).astype(int)
    d = design_from_arrays(X, y)
    a = fit_forest(d, trees=15, seed=9)
    b = fit_forest(d, trees=15, seed=9)
    assert a.params() == b.params()
    assert a.max_features == 2
    c = fit_forest(d, trees=15, seed=10)
    assert a.params() != c.params()


def test_forest_oob_separable():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 4))
    y = (X @ [1.0, -1.0, 0.5, 0.0] > 0).astype(int)
    f = fit_forest(design_from_arrays(X, y), trees=60, seed=0)
    assert f.oob_error is not None and f.oob_error <= 0.10


def test_forest_tie_goes_to_zero(rng):
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] > 0).astype(int)
    f = fit_forest(design_from_arrays(X, y), trees=2, seed=0)
    votes = f.votes(X)
    assert np.all(f.predict(X)[votes == 1] == 0)


def test_forest_validation(rng):
    d = design_from_arrays(rng.normal(size=(10, 2)), [0, 1] * 5)
    with pytest.raises(ValueError):
        fit_forest(d, trees=0)
    with pytest.raises(ValueError):
        fit_forest(d, max_features=3)
