"""CART-style classification trees, cost-complexity pruning and random forests.

Trees split on ``x[feature] <= threshold`` with thresholds at midpoints
between consecutive distinct sorted values, choosing the split with the
lowest weighted Gini impurity. Trees and forests work on the raw feature
scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .design import Classifier, Standardization, StandardizedDesign, stratified_folds


@dataclass(eq=False)
class TreeNode:
    counts: tuple[int, int]
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def n(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def prediction(self) -> int:
        return 1 if self.counts[1] > self.counts[0] else 0

    @property
    def proportions(self) -> tuple[float, float]:
        n = self.n
        return (self.counts[0] / n, self.counts[1] / n) if n else (0.0, 0.0)

    def leaves(self) -> int:
        return 1 if self.is_leaf else self.left.leaves() + self.right.leaves()

    def nodes(self) -> int:
        return 1 if self.is_leaf else 1 + self.left.nodes() + self.right.nodes()

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> dict:
        d = {"counts": list(self.counts)}
        if not self.is_leaf:
            d.update(
                feature=self.feature,
                threshold=float(self.threshold),
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        counts = (int(d["counts"][0]), int(d["counts"][1]))
        if "left" not in d:
            return cls(counts)
        return cls(counts, int(d["feature"]), float(d["threshold"]), cls.from_dict(d["left"]), cls.from_dict(d["right"]))


def gini(counts) -> float:
    n = counts[0] + counts[1]
    if n == 0:
        return 0.0
    p = counts[1] / n
    return 2.0 * p * (1.0 - p)


def predict_node(root: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, x in enumerate(X):
        node = root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        out[i] = node.prediction
    return out


def _best_split(X, y, idx, features, min_leaf):
    """(weighted impurity, feature, threshold) of the best split, or None."""
    n = idx.size
    best = None
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        ys = y[idx][order]
        ones_left = np.cumsum(ys)[:-1].astype(np.float64)
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        ones_right = ys.sum() - ones_left
        valid = xs[:-1] < xs[1:]
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        # n_node * gini = 2 * ones * zeros / n_node
        imp = 2.0 * ones_left * (n_left - ones_left) / n_left + 2.0 * ones_right * (n_right - ones_right) / n_right
        imp = np.where(valid, imp, np.inf)
        i = int(np.argmin(imp))
        if best is None or imp[i] < best[0]:
            lo, hi = xs[i], xs[i + 1]
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (float(imp[i]), int(f), float(thr))
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    min_leaf: int = 5,
    max_depth: int = 30,
    max_features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> TreeNode:
    """Greedy recursive partitioning on rows of ``X``.

    With ``max_features`` < p a fresh uniform sample of candidate features is
    drawn from ``rng`` at every node. A node becomes a leaf when it is pure, at
    ``max_depth``, too small to give two children of ``min_leaf`` rows, or when
    no split strictly lowers its weighted impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    p = X.shape[1]
    m = p if max_features is None else int(max_features)
    if not 1 <= m <= p:
        raise ValueError(f"max_features={m} outside [1, {p}]")
    if m < p and rng is None:
        raise ValueError("feature subsampling needs an rng")

    def build(idx, depth):
        ones = int(y[idx].sum())
        node = TreeNode((idx.size - ones, ones))
        if ones == 0 or ones == idx.size or depth >= max_depth or idx.size < 2 * min_leaf:
            return node
        feats = np.arange(p) if m == p else np.sort(rng.choice(p, size=m, replace=False))
        found = _best_split(X, y, idx, feats, min_leaf)
        parent = idx.size * gini(node.counts)
        if found is None or not found[0] < parent - 1e-12 * idx.size:
            return node
        _, f, thr = found
        go_left = X[idx, f] <= thr
        node.feature, node.threshold = f, thr
        node.left = build(idx[go_left], depth + 1)
        node.right = build(idx[~go_left], depth + 1)
        return node

    return build(np.arange(X.shape[0]), 0)


# --------------------------------------------------------------------------
# cost-complexity pruning


def _copy(node: TreeNode) -> TreeNode:
    if node.is_leaf:
        return TreeNode(node.counts)
    return TreeNode(node.counts, node.feature, node.threshold, _copy(node.left), _copy(node.right))


def _node_error(node: TreeNode) -> int:
    return node.n - max(node.counts)


def _subtree_stats(node: TreeNode) -> tuple[int, int]:
    """(training errors summed over leaves, leaf count)."""
    if node.is_leaf:
        return _node_error(node), 1
    el, ll = _subtree_stats(node.left)
    er, lr = _subtree_stats(node.right)
    return el + er, ll + lr


def _weakest_link(node: TreeNode, n_total: int) -> float:
    """Smallest g(t) = (R(t) - R(T_t)) / (|T_t| - 1) over internal nodes."""
    if node.is_leaf:
        return math.inf
    err, leaves = _subtree_stats(node)
    g = (_node_error(node) - err) / n_total / (leaves - 1)
    return min(g, _weakest_link(node.left, n_total), _weakest_link(node.right, n_total))


def _collapse(node: TreeNode, alpha: float, n_total: int) -> TreeNode:
    """Copy of ``node`` with every internal node whose g(t) <= alpha turned into a leaf."""
    if node.is_leaf:
        return TreeNode(node.counts)
    err, leaves = _subtree_stats(node)
    g = (_node_error(node) - err) / n_total / (leaves - 1)
    if g <= alpha + 1e-12:
        return TreeNode(node.counts)
    return TreeNode(
        node.counts, node.feature, node.threshold, _collapse(node.left, alpha, n_total), _collapse(node.right, alpha, n_total)
    )


def cost_complexity_path(root: TreeNode) -> list[tuple[float, TreeNode]]:
    """Nested subtrees T_0 > T_1 > ... > root leaf with their alpha values.

    Each step collapses the weakest links; errors are training misclassification
    rates relative to the root sample size.
    """
    n_total = root.n
    path = [(0.0, _copy(root))]
    current = path[0][1]
    while not current.is_leaf:
        alpha = max(_weakest_link(current, n_total), path[-1][0])
        current = _collapse(current, alpha, n_total)
        path.append((alpha, current))
    return path


def prune_at(path: list[tuple[float, TreeNode]], alpha: float) -> TreeNode:
    chosen = path[0][1]
    for a, t in path:
        if a <= alpha + 1e-12:
            chosen = t
        else:
            break
    return chosen


@dataclass(eq=False)
class TreeModel(Classifier):
    kind = "tree"

    root: TreeNode
    standardization: Standardization
    min_leaf: int = 5
    max_depth: int = 30
    alpha: float = 0.0
    cv_table: list = field(default_factory=list)

    def predict_design(self, Z):
        return predict_node(self.root, np.atleast_2d(np.asarray(Z, dtype=np.float64)))

    def proportions(self, Z) -> np.ndarray:
        """Training class proportions of the leaf each row falls into."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        out = np.empty((Z.shape[0], 2))
        for i, x in enumerate(Z):
            node = self.root
            while not node.is_leaf:
                node = node.left if x[node.feature] <= node.threshold else node.right
            out[i] = node.proportions
        return out

    def params(self):
        return {
            "root": self.root.to_dict(),
            "min_leaf": self.min_leaf,
            "max_depth": self.max_depth,
            "alpha": self.alpha,
            "leaves": self.root.leaves(),
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            TreeNode.from_dict(params["root"]),
            standardization,
            params.get("min_leaf", 5),
            params.get("max_depth", 30),
            params.get("alpha", 0.0),
        )


def fit_tree(design: StandardizedDesign, min_leaf: int = 5, max_depth: int = 30) -> TreeModel:
    """Grow an unpruned tree on the raw (unstandardized) predictors."""
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if design.n < 2 * min_leaf:
        raise ValueError(f"n={design.n} rows cannot support two leaves of {min_leaf}")
    root = grow_tree(design.raw, design.y, min_leaf, max_depth)
    return TreeModel(root, Standardization.identity(design.columns), min_leaf, max_depth)


def prune_tree(model: TreeModel, design: StandardizedDesign, folds: int = 10, seed: int = 0) -> TreeModel:
    """Cost-complexity pruning with alpha picked by stratified V-fold CV.

    Candidate alphas are the geometric midpoints of the full tree's pruning
    path. Fold trees are regrown with the same stopping rules and pruned at
    each candidate; the simplest subtree whose CV error is within one
    standard error of the minimum is returned.
    """
    path = cost_complexity_path(model.root)
    if len(path) == 1:
        return TreeModel(_copy(model.root), model.standardization, model.min_leaf, model.max_depth, 0.0, [])
    alphas = [a for a, _ in path]
    # the root leaf is optimal on [alpha_K, inf); fold trees may need a larger
    # alpha than alpha_K to collapse, so that interval is represented by inf
    betas = [math.sqrt(alphas[k] * alphas[k + 1]) for k in range(len(alphas) - 1)] + [math.inf]

    fold_of = stratified_folds(design.y, folds, seed)
    X, y = design.raw, design.y
    errors = np.zeros(len(betas))
    for v in range(folds):
        train = fold_of != v
        test = ~train
        if not test.any() or train.sum() < 2 * model.min_leaf:
            continue
        sub = grow_tree(X[train], y[train], model.min_leaf, model.max_depth)
        sub_path = cost_complexity_path(sub)
        for k, b in enumerate(betas):
            pred = predict_node(prune_at(sub_path, b), X[test])
            errors[k] += np.sum(pred != y[test])
    n = design.n
    cv = errors / n
    se = np.sqrt(cv * (1.0 - cv) / n)
    k_min = int(np.argmin(cv))
    limit = cv[k_min] + se[k_min]
    k_sel = max(k for k in range(len(cv)) if cv[k] <= limit + 1e-12)
    table = [
        {"alpha": float(alphas[k]), "leaves": path[k][1].leaves(), "cv_error": float(cv[k]), "se": float(se[k])}
        for k in range(len(cv))
    ]
    return TreeModel(
        _copy(path[k_sel][1]), model.standardization, model.min_leaf, model.max_depth, float(alphas[k_sel]), table
    )


def is_subtree(pruned: TreeNode, full: TreeNode) -> bool:
    """True if ``pruned`` is ``full`` with some internal nodes turned into leaves."""
    if pruned.counts != full.counts:
        return False
    if pruned.is_leaf:
        return True
    if full.is_leaf or pruned.feature != full.feature or pruned.threshold != full.threshold:
        return False
    return is_subtree(pruned.left, full.left) and is_subtree(pruned.right, full.right)


# --------------------------------------------------------------------------
# random forest


@dataclass(eq=False)
class ForestModel(Classifier):
    kind = "forest"

    trees: list[TreeNode]
    max_features: int
    seed: int
    standardization: Standardization
    bootstrap: bool = True
    min_leaf: int = 1
    oob_error: Optional[float] = None

    def votes(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return np.sum([predict_node(t, Z) for t in self.trees], axis=0)

    def predict_design(self, Z):
        # tie votes go to class 0
        return (2 * self.votes(Z) > len(self.trees)).astype(np.int64)

    def params(self):
        return {
            "trees": [t.to_dict() for t in self.trees],
            "max_features": self.max_features,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "min_leaf": self.min_leaf,
            "oob_error": self.oob_error,
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            [TreeNode.from_dict(t) for t in params["trees"]],
            params["max_features"],
            params["seed"],
            standardization,
            params.get("bootstrap", True),
            params.get("min_leaf", 1),
            params.get("oob_error"),
        )


def fit_forest(
    design: StandardizedDesign,
    trees: int = 100,
    max_features: Optional[int] = None,
    seed: int = 0,
    bootstrap: bool = True,
    min_leaf: int = 1,
    max_depth: int = 30,
) -> ForestModel:
    """Random forest: bootstrap resamples plus per-split feature sampling.

    ``max_features`` defaults to round(sqrt(p)). Every tree gets its own RNG
    stream spawned from ``seed``, so the forest is reproducible. The
    out-of-bag error is recorded when bootstrapping.
    """
    if trees < 1:
        raise ValueError("need at least one tree")
    p = design.p
    m = max(1, int(round(math.sqrt(p)))) if max_features is None else int(max_features)
    if not 1 <= m <= p:
        raise ValueError(f"max_features={m} outside [1, {p}]")
    X, y = design.raw, design.y
    n = design.n
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trees)]
    fitted = []
    oob_votes = np.zeros(n)
    oob_counts = np.zeros(n)
    for rng in streams:
        if bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        t = grow_tree(X[idx], y[idx], min_leaf, max_depth, m, rng)
        fitted.append(t)
        if bootstrap:
            oob = np.ones(n, dtype=bool)
            oob[idx] = False
            if oob.any():
                oob_votes[oob] += predict_node(t, X[oob])
                oob_counts[oob] += 1
    oob_error = None
    if bootstrap and oob_counts.any():
        seen = oob_counts > 0
        pred = (2 * oob_votes[seen] > oob_counts[seen]).astype(np.int64)
        oob_error = float(np.mean(pred != y[seen]))
    return ForestModel(fitted, m, seed, Standardization.identity(design.columns), bootstrap, min_leaf, oob_error)
