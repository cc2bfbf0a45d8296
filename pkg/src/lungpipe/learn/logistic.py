"""Multiple logistic regression fitted by iteratively reweighted least squares."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import ConvergenceWarning
from .design import Classifier, Standardization, StandardizedDesign


@dataclass(eq=False)
class LogisticModel(Classifier):
    kind = "logistic"

    intercept: float
    coef: np.ndarray
    standardization: Standardization
    converged: bool = True
    iterations: int = 0
    ridge: bool = False

    def probability(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return expit(self.intercept + Z @ self.coef)

    def predict_design(self, Z):
        return (self.probability(Z) > 0.5).astype(np.int64)

    def params(self):
        return {
            "intercept": float(self.intercept),
            "coef": [float(b) for b in self.coef],
            "converged": self.converged,
            "iterations": self.iterations,
            "ridge": self.ridge,
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            params["intercept"],
            np.asarray(params["coef"], float),
            standardization,
            params.get("converged", True),
            params.get("iterations", 0),
            params.get("ridge", False),
        )


def fit_logistic(design: StandardizedDesign, max_iter: int = 100, tol: float = 1e-8) -> LogisticModel:
    """Maximum-likelihood logistic fit (Newton-Raphson / IRLS).

    Stops when max |delta beta| < ``tol`` or after ``max_iter`` iterations. A
    singular weighted system is ridge-regularized with 1e-8 and flagged on the
    model. Non-convergence (e.g. perfect separation) emits a
    ConvergenceWarning and returns the last iterate with ``converged=False``.
    """
    y = design.y.astype(np.float64)
    if np.all(y == y[0]):
        raise ValueError("logistic regression needs both classes in the training labels")
    A = np.column_stack([np.ones(design.n), design.X])
    beta = np.zeros(A.shape[1])
    ridge = False
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = expit(A @ beta)
        w = prob * (1.0 - prob)
        H = A.T @ (A * w[:, None])
        g = A.T @ (y - prob)
        try:
            if np.linalg.cond(H) > 1e12:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            ridge = True
            step = np.linalg.solve(H + 1e-8 * np.eye(H.shape[0]), g)
        if not np.all(np.isfinite(step)):
            break
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    # on separable data the probabilities saturate, the gradient underflows
    # and the step vanishes even though the likelihood has no maximum
    prob = expit(A @ beta)
    if converged and np.all(np.abs(y - prob) < 1e-10):
        converged = False
    if not converged:
        warnings.warn(
            f"IRLS did not converge in {max_iter} iterations (separable data?)",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LogisticModel(float(beta[0]), beta[1:].copy(), design.standardization, converged, it, ridge)


def predict_logistic(model: LogisticModel, x) -> np.ndarray:
    """P(y = 1 | x) for model-space inputs."""
    return model.probability(x)
