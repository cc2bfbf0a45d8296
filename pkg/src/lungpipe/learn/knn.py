"""K-nearest-neighbour classification by averaging neighbour labels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Classifier, Standardization, StandardizedDesign


@dataclass(eq=False)
class KNNModel(Classifier):
    kind = "knn"

    X: np.ndarray
    y: np.ndarray
    k: int
    standardization: Standardization

    def neighbors(self, Z) -> np.ndarray:
        """Indices of the k nearest training rows (Euclidean; ties by row index)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        d2 = np.sum((Z[:, None, :] - self.X[None, :, :]) ** 2, axis=2)
        return np.argsort(d2, axis=1, kind="stable")[:, : self.k]

    def score(self, Z) -> np.ndarray:
        """Mean label of the k nearest neighbours."""
        return self.y[self.neighbors(Z)].mean(axis=1)

    def predict_design(self, Z):
        # a 50/50 vote goes to class 0
        return (self.score(Z) > 0.5).astype(np.int64)

    def params(self):
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, params, standardization):
        return cls(np.asarray(params["X"], float), np.asarray(params["y"], np.int64), params["k"], standardization)


def fit_knn(design: StandardizedDesign, k: int = 5) -> KNNModel:
    if not 1 <= k <= design.n:
        raise ValueError(f"k={k} outside [1, n={design.n}]")
    return KNNModel(design.X.copy(), design.y.copy(), int(k), design.standardization)


def predict_knn(model: KNNModel, x) -> np.ndarray:
    return model.predict_design(x)
