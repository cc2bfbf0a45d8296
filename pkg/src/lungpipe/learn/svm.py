"""Soft-margin kernel SVM trained by sequential minimal optimization.

Kernels: inner product <x, z>, polynomial (1 + <x, z>)^d and radial
exp(-gamma ||x - z||^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConvergenceError
from .design import Classifier, Standardization, StandardizedDesign, stratified_folds

_ALIASES = {"inner-product": "linear", "inner": "linear", "linear": "linear", "polynomial": "polynomial", "radial": "radial", "rbf": "radial"}


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "radial"
    degree: int = 3
    gamma: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown kernel {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError(f"polynomial degree must be an integer >= 1, got {self.degree}")
        if kind == "radial" and not self.gamma > 0:
            raise ValueError(f"radial kernel needs gamma > 0, got {self.gamma}")

    def matrix(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        if self.kind == "radial":
            d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
            return np.exp(-self.gamma * np.maximum(d2, 0.0))
        G = A @ B.T
        if self.kind == "linear":
            return G
        return (1.0 + G) ** int(self.degree)

    def to_dict(self):
        return {"kind": self.kind, "degree": int(self.degree), "gamma": float(self.gamma)}


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.size != z.size:
        raise ValueError(f"vector lengths differ: {x.size} vs {z.size}")
    if spec.kind == "radial":
        d = x - z
        return float(np.exp(-spec.gamma * (d @ d)))
    ip = float(x @ z)
    return ip if spec.kind == "linear" else (1.0 + ip) ** int(spec.degree)


@dataclass
class SMOResult:
    alpha: np.ndarray
    rho: float
    gradient: np.ndarray
    iterations: int


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 200_000) -> SMOResult:
    """Solve min 1/2 a'Qa - e'a s.t. 0 <= a <= C, y'a = 0 with Q = yy' * K.

    Working pairs are chosen with second-order information (maximal violating
    ``i``, then the ``j`` giving the largest guaranteed decrease). Stops when
    the maximal KKT violation m(a) - M(a) falls below ``tol``.
    """
    n = y.size
    y = y.astype(np.float64)
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    it = 0
    while True:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        m = s_up[i]
        s_low = np.where(low, score, np.inf)
        M = s_low.min()
        if m - M < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not converge after {it} iterations (gap {m - M:.3g})", it)
        it += 1
        b = m - score
        a = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, tau)
        cand = low & (score < m)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        ai, aj = alpha[i], alpha[j]
        Qi, Qj = Q[i], Q[j]
        if y[i] != y[j]:
            quad = max(QD[i] + QD[j] + 2.0 * Qi[j], tau)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(QD[i] + QD[j] - 2.0 * Qi[j], tau)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        G += Qi * (ni - ai) + Qj * (nj - aj)
        alpha[i], alpha[j] = ni, nj

    # bias from free vectors, else midpoint of the feasible interval
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub) and np.isfinite(lb) else float(ub if np.isfinite(ub) else lb)
    return SMOResult(alpha, rho, G, it)


def dual_objective(alpha: np.ndarray, y_pm: np.ndarray, K: np.ndarray) -> np.ndarray:
    """W(a) = sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij; rows of ``alpha`` are evaluated independently."""
    A = np.atleast_2d(alpha) * y_pm[None, :]
    return np.atleast_2d(alpha).sum(axis=1) - 0.5 * np.einsum("ri,ij,rj->r", A, K, A)


@dataclass(eq=False)
class SVMModel(Classifier):
    kind = "svm"

    kernel: KernelSpec
    support_vectors: np.ndarray
    alphas: np.ndarray  # in [0, C] for the support vectors
    sv_labels: np.ndarray  # +1 / -1
    bias: float
    C: float
    standardization: Standardization
    iterations: int = 0

    def decision_function(self, Z) -> np.ndarray:
        """f(x) = bias + sum_i alpha_i y_i K(x, x_i)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if self.support_vectors.shape[0] == 0:
            return np.full(Z.shape[0], self.bias)
        return self.kernel.matrix(Z, self.support_vectors) @ (self.alphas * self.sv_labels) + self.bias

    def predict_design(self, Z):
        return (self.decision_function(Z) > 0).astype(np.int64)

    def params(self):
        return {
            "kernel": self.kernel.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "alphas": self.alphas.tolist(),
            "sv_labels": self.sv_labels.tolist(),
            "bias": self.bias,
            "cost": self.C,
            "iterations": self.iterations,
        }

    @classmethod
    def from_params(cls, params, standardization):
        sv = np.asarray(params["support_vectors"], float)
        return cls(
            KernelSpec(**params["kernel"]),
            sv.reshape(-1, len(standardization.columns)),
            np.asarray(params["alphas"], float),
            np.asarray(params["sv_labels"], float),
            params["bias"],
            params["cost"],
            standardization,
            params.get("iterations", 0),
        )


def fit_svm(
    design: StandardizedDesign,
    kernel: KernelSpec = KernelSpec(),
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 200_000,
) -> SVMModel:
    """Soft-margin SVM on the standardized predictors; labels map 1 -> +1, 0 -> -1."""
    if not C > 0:
        raise ValueError(f"cost must be positive, got {C}")
    if np.unique(design.y).size < 2:
        raise ValueError("SVM needs both classes present")
    y_pm = np.where(design.y == 1, 1.0, -1.0)
    K = kernel.matrix(design.X, design.X)
    res = smo(K, y_pm, C, tol, max_iter)
    sv = res.alpha > 0
    return SVMModel(
        kernel,
        design.X[sv].copy(),
        res.alpha[sv].copy(),
        y_pm[sv],
        -res.rho,
        float(C),
        design.standardization,
        res.iterations,
    )


def predict_svm(model: SVMModel, x) -> np.ndarray:
    return model.predict_design(x)


@dataclass
class TuneResult:
    C: float
    gamma: float
    table: list[dict] = field(default_factory=list)


def cv_accuracy(design: StandardizedDesign, fold_of: np.ndarray, fit) -> float:
    correct = 0
    for v in np.unique(fold_of):
        train = fold_of != v
        model = fit(design.rows(np.flatnonzero(train)))
        test = np.flatnonzero(~train)
        correct += int(np.sum(model.predict_design(design.X[test]) == design.y[test]))
    return correct / design.n


def tune_svm(
    design: StandardizedDesign,
    grid: Iterable[tuple[float, float]],
    folds: int = 5,
    seed: int = 0,
    kind: str = "radial",
    degree: int = 3,
) -> TuneResult:
    """Stratified V-fold CV accuracy over (cost, gamma) pairs.

    All grid points share one fold assignment. Best accuracy wins; ties go to
    the smaller cost, then the smaller gamma.
    """
    grid = [(float(c), float(g)) for c, g in grid]
    if not grid:
        raise ValueError("empty tuning grid")
    fold_of = stratified_folds(design.y, folds, seed)
    table = []
    for C, gamma in grid:
        spec = KernelSpec(kind, degree, gamma)
        acc = cv_accuracy(design, fold_of, lambda d: fit_svm(d, spec, C))
        table.append({"cost": C, "gamma": gamma, "cv_accuracy": acc})
    best = min(table, key=lambda r: (-r["cv_accuracy"], r["cost"], r["gamma"]))
    return TuneResult(best["cost"], best["gamma"], table)


def default_grid(costs: Sequence[float] = (0.1, 1, 10), gammas: Sequence[float] = (0.1, 1, 10)):
    return [(c, g) for c in costs for g in gammas]
