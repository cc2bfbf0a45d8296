"""Linear and quadratic discriminant analysis (Gaussian class-conditionals)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Classifier, Standardization, StandardizedDesign


def _regularize(S: np.ndarray) -> tuple[np.ndarray, float]:
    """Add lambda*I (lambda = 1e-6 * trace / p) when ``S`` is numerically singular."""
    p = S.shape[0]
    try:
        ok = np.linalg.cond(S) < 1e12
    except np.linalg.LinAlgError:
        ok = False
    if ok and np.all(np.linalg.eigvalsh(S) > 0):
        return S, 0.0
    lam = 1e-6 * float(np.trace(S)) / p
    if lam <= 0:
        lam = 1e-6
    return S + lam * np.eye(p), lam


def _class_split(design: StandardizedDesign):
    classes = np.unique(design.y)
    if classes.size < 2:
        raise ValueError("discriminant analysis needs at least two classes")
    groups = [design.X[design.y == c] for c in classes]
    return classes, groups


@dataclass(eq=False)
class LDAModel(Classifier):
    kind = "lda"

    classes: np.ndarray
    means: np.ndarray  # (K, p)
    covariance: np.ndarray  # pooled (p, p)
    priors: np.ndarray
    standardization: Standardization
    regularization: float = 0.0

    def discriminants(self, Z) -> np.ndarray:
        """delta_k(x) = x' S^-1 mu_k - 1/2 mu_k' S^-1 mu_k + ln pi_k, one column per class."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        Sinv_mu = np.linalg.solve(self.covariance, self.means.T)  # (p, K)
        const = -0.5 * np.sum(self.means.T * Sinv_mu, axis=0) + np.log(self.priors)
        return Z @ Sinv_mu + const

    def predict_design(self, Z):
        return self.classes[np.argmax(self.discriminants(Z), axis=1)]

    def params(self):
        return {
            "classes": self.classes.tolist(),
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "priors": self.priors.tolist(),
            "regularization": self.regularization,
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            np.asarray(params["classes"], np.int64),
            np.asarray(params["means"], float),
            np.asarray(params["covariance"], float),
            np.asarray(params["priors"], float),
            standardization,
            params.get("regularization", 0.0),
        )


def pooled_covariance(groups) -> np.ndarray:
    n = sum(len(g) for g in groups)
    K = len(groups)
    p = groups[0].shape[1]
    S = np.zeros((p, p))
    for g in groups:
        d = g - g.mean(axis=0)
        S += d.T @ d
    return S / (n - K)


def fit_lda(design: StandardizedDesign) -> LDAModel:
    classes, groups = _class_split(design)
    for c, g in zip(classes, groups):
        if len(g) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
    means = np.array([g.mean(axis=0) for g in groups])
    S, lam = _regularize(pooled_covariance(groups))
    priors = np.array([len(g) for g in groups], dtype=np.float64) / design.n
    return LDAModel(classes, means, S, priors, design.standardization, lam)


def discriminant_lda(model: LDAModel, x) -> np.ndarray:
    return model.discriminants(x)


@dataclass(eq=False)
class QDAModel(Classifier):
    kind = "qda"

    classes: np.ndarray
    means: np.ndarray
    covariances: np.ndarray  # (K, p, p)
    priors: np.ndarray
    standardization: Standardization
    regularization: tuple = ()
    shared: bool = False

    def discriminants(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        out = np.empty((Z.shape[0], len(self.classes)))
        for k, (mu, S, pi) in enumerate(zip(self.means, self.covariances, self.priors)):
            Sinv_Z = np.linalg.solve(S, Z.T)  # (p, n)
            Sinv_mu = np.linalg.solve(S, mu)
            _, logdet = np.linalg.slogdet(S)
            out[:, k] = (
                -0.5 * np.sum(Z.T * Sinv_Z, axis=0)
                + Z @ Sinv_mu
                - 0.5 * mu @ Sinv_mu
                - 0.5 * logdet
                + np.log(pi)
            )
        return out

    def predict_design(self, Z):
        return self.classes[np.argmax(self.discriminants(Z), axis=1)]

    def params(self):
        return {
            "classes": self.classes.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "priors": self.priors.tolist(),
            "regularization": list(self.regularization),
            "shared": self.shared,
        }

    @classmethod
    def from_params(cls, params, standardization):
        return cls(
            np.asarray(params["classes"], np.int64),
            np.asarray(params["means"], float),
            np.asarray(params["covariances"], float),
            np.asarray(params["priors"], float),
            standardization,
            tuple(params.get("regularization", ())),
            params.get("shared", False),
        )


def fit_qda(design: StandardizedDesign, shared_covariance: bool = False) -> QDAModel:
    """Per-class means and covariances (unbiased, n_k - 1).

    With ``shared_covariance`` every class uses the pooled LDA covariance,
    which makes the quadratic terms cancel and reproduces LDA's decisions.
    """
    classes, groups = _class_split(design)
    p = design.p
    if shared_covariance:
        for c, g in zip(classes, groups):
            if len(g) < 2:
                raise ValueError(f"class {c} has fewer than 2 samples")
        S, lam = _regularize(pooled_covariance(groups))
        covs = np.array([S] * len(groups))
        lams = (lam,) * len(groups)
    else:
        covs, lams = [], []
        for c, g in zip(classes, groups):
            if len(g) < p + 1:
                raise ValueError(f"class {c} has {len(g)} samples; QDA needs at least p+1={p + 1}")
            d = g - g.mean(axis=0)
            S, lam = _regularize(d.T @ d / (len(g) - 1))
            covs.append(S)
            lams.append(lam)
        covs = np.array(covs)
        lams = tuple(lams)
    means = np.array([g.mean(axis=0) for g in groups])
    priors = np.array([len(g) for g in groups], dtype=np.float64) / design.n
    return QDAModel(classes, means, covs, priors, design.standardization, lams, shared_covariance)


def discriminant_qda(model: QDAModel, x) -> np.ndarray:
    return model.discriminants(x)
