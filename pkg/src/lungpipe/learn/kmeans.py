"""K-means clustering (k-means++ seeding, Lloyd iterations) used as a classifier."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .design import Classifier, Standardization, StandardizedDesign


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return np.sum((X[:, None, :] - C[None, :, :]) ** 2, axis=2)


def assign_points(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest centroid per row (lowest index on ties)."""
    return np.argmin(_sq_dists(X, centroids), axis=1)


def within_cluster_objective(X: np.ndarray, labels: np.ndarray, K: int) -> float:
    """sum_k W(C_k), W(C_k) = (1/|C_k|) sum_{i,i' in C_k} ||x_i - x_i'||^2.

    Evaluated through the identity W(C_k) = 2 sum_{i in C_k} ||x_i - mean_k||^2.
    """
    total = 0.0
    for k in range(K):
        pts = X[labels == k]
        if len(pts):
            d = pts - pts.mean(axis=0)
            total += 2.0 * float(np.sum(d * d))
    return total


def kmeans_pp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [int(rng.integers(n))]
    d2 = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a center
            rest = np.setdiff1d(np.arange(n), centers)
            nxt = int(rest[rng.integers(rest.size)])
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        centers.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[centers].copy()


def lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int = 300):
    """Lloyd iterations from ``centroids``.

    Returns (centroids, labels, objective history, converged). The history
    holds the objective of every partition visited, which never increases.
    An emptied cluster is re-seeded at the point farthest from its centroid.
    """
    K = centroids.shape[0]
    C = centroids.astype(np.float64).copy()
    labels = assign_points(X, C)
    history = []
    converged = False
    for _ in range(max_iter):
        counts = np.bincount(labels, minlength=K)
        for k in np.flatnonzero(counts == 0):
            d = np.sum((X - C[labels]) ** 2, axis=1)
            movable = counts[labels] > 1
            far = int(np.argmax(np.where(movable, d, -1.0)))
            counts[labels[far]] -= 1
            labels[far] = k
            counts[k] = 1
        history.append(within_cluster_objective(X, labels, K))
        C = np.array([X[labels == k].mean(axis=0) for k in range(K)])
        new = assign_points(X, C)
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
    return C, labels, history, converged


@dataclass(eq=False)
class KMeansModel(Classifier):
    kind = "kmeans"

    centroids: np.ndarray
    cluster_to_label: np.ndarray
    standardization: Standardization
    labels_: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    objective: float = 0.0
    history: list = field(default_factory=list)
    seed: int = 0
    restarts: int = 1

    def assign(self, Z) -> np.ndarray:
        return assign_points(np.atleast_2d(np.asarray(Z, dtype=np.float64)), self.centroids)

    def predict_design(self, Z):
        return self.cluster_to_label[self.assign(Z)]

    def params(self):
        return {
            "centroids": self.centroids.tolist(),
            "cluster_to_label": self.cluster_to_label.tolist(),
            "objective": self.objective,
            "seed": self.seed,
            "restarts": self.restarts,
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            np.asarray(params["centroids"], float),
            np.asarray(params["cluster_to_label"], np.int64),
            standardization,
            objective=params.get("objective", 0.0),
            seed=params.get("seed", 0),
            restarts=params.get("restarts", 1),
        )


def _best_mapping(clusters: np.ndarray, y: np.ndarray, K: int) -> np.ndarray:
    """Cluster -> label map maximizing agreement with ``y``.

    Two clusters: the better of the two permutations (identity on ties).
    Otherwise each cluster takes its majority label.
    """
    if K == 2:
        best = max(permutations((0, 1)), key=lambda m: np.sum(np.asarray(m)[clusters] == y))
        return np.asarray(best, dtype=np.int64)
    out = np.zeros(K, dtype=np.int64)
    for k in range(K):
        lab = y[clusters == k]
        out[k] = 1 if lab.size and 2 * lab.sum() > lab.size else 0
    return out


def fit_kmeans(design: StandardizedDesign, K: int = 2, seed: int = 0, restarts: int = 10, max_iter: int = 300) -> KMeansModel:
    """Best of ``restarts`` k-means++/Lloyd runs on the standardized predictors.

    Labels are not used for clustering, only to name clusters afterwards.
    """
    X = design.X
    if not 1 <= K <= design.n:
        raise ValueError(f"K={K} outside [1, n={design.n}]")
    best = None
    for rng in (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)):
        C, labels, hist, _ = lloyd(X, kmeans_pp(X, K, rng), max_iter)
        if best is None or hist[-1] < best[2][-1]:
            best = (C, labels, hist)
    C, labels, hist = best
    mapping = _best_mapping(labels, design.y, K)
    return KMeansModel(C, mapping, design.standardization, labels, hist[-1], hist, seed, restarts)


def kmeans_accuracy(model: KMeansModel, design: StandardizedDesign) -> float:
    """Accuracy under the cluster-to-label assignment that best fits ``design``'s labels."""
    if model.centroids.shape[0] != 2:
        raise ValueError("kmeans_accuracy is defined for K = 2")
    clusters = model.assign(design.X)
    m = _best_mapping(clusters, design.y, 2)
    return float(np.mean(m[clusters] == design.y))
