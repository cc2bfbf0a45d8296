"""Design matrices, standardization and the shared model plumbing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Iterable, Sequence

import numpy as np

from ..errors import DegenerateColumnError
from ..features import FeatureTable


@dataclass(frozen=True, eq=False)
class Standardization:
    """Column-wise affine map ``(x - mean) / scale`` applied to raw features."""

    columns: tuple[str, ...]
    means: np.ndarray
    scales: np.ndarray

    @classmethod
    def identity(cls, columns: Sequence[str]) -> "Standardization":
        p = len(columns)
        return cls(tuple(columns), np.zeros(p), np.ones(p))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got {X.shape[1]}")
        return (X - self.means) / self.scales

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "means": [float(v) for v in self.means],
            "scales": [float(v) for v in self.scales],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(tuple(d["columns"]), np.asarray(d["means"], float), np.asarray(d["scales"], float))


@dataclass(eq=False)
class StandardizedDesign:
    """Predictors and binary responses ready for fitting.

    ``X`` is the standardized matrix (zero mean, unit population variance per
    column); ``raw`` keeps the original scale for the tree-based models.
    """

    X: np.ndarray
    y: np.ndarray
    raw: np.ndarray
    standardization: Standardization

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def columns(self) -> tuple[str, ...]:
        return self.standardization.columns

    def rows(self, idx) -> "StandardizedDesign":
        """Row subset that keeps the parent's standardization parameters."""
        idx = np.asarray(idx)
        return StandardizedDesign(self.X[idx], self.y[idx], self.raw[idx], self.standardization)


def design_from_arrays(X, y, columns: Sequence[str] | None = None, standardize: bool = True) -> StandardizedDesign:
    raw = np.asarray(X, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw.reshape(-1, 1)
    y = np.asarray(y).astype(np.int64).ravel()
    if raw.shape[0] != y.size:
        raise ValueError(f"{raw.shape[0]} rows but {y.size} labels")
    if raw.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")
    if not np.all(np.isfinite(raw)):
        raise ValueError("design contains missing or non-finite values")
    cols = tuple(columns) if columns is not None else tuple(f"x{j + 1}" for j in range(raw.shape[1]))
    if standardize:
        means = raw.mean(axis=0)
        scales = raw.std(axis=0)
        for j, s in enumerate(scales):
            if s == 0.0 or not np.isfinite(s):
                raise DegenerateColumnError(cols[j])
        st = Standardization(cols, means, scales)
    else:
        st = Standardization.identity(cols)
    return StandardizedDesign(st.apply(raw), y, raw, st)


def standardize(table: FeatureTable, columns: Iterable[str] | None = None) -> StandardizedDesign:
    """Build a standardized design from a labeled feature table."""
    cols = tuple(columns) if columns is not None else table.columns
    if len(table) < 2:
        raise ValueError("need at least 2 rows to standardize")
    return design_from_arrays(table.matrix(cols), table.labels(), cols)


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold id (0..folds-1) for every row; class ratios balanced across folds."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    out = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        out[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return out


class Classifier:
    """Mixin for fitted binary classifiers.

    Subclasses implement ``predict_design`` on model-space inputs and carry a
    ``standardization`` attribute mapping raw feature columns into that space.
    """

    kind: ClassVar[str] = ""

    def predict_design(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X_raw) -> np.ndarray:
        return self.predict_design(self.standardization.apply(X_raw))

    @property
    def columns(self) -> tuple[str, ...]:
        return self.standardization.columns

    def params(self) -> dict:
        raise NotImplementedError
