"""Exhaustive best-subset linear regression with RSS, Cp, BIC and adjusted R^2."""
from __future__ import annotations

import csv
import itertools
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import RankError, SubsetSizeError
from .design import StandardizedDesign

MAX_PREDICTORS = 20


def _rss(X: np.ndarray, y: np.ndarray, cols: tuple[int, ...]) -> float:
    A = np.column_stack([np.ones(len(y))] + [X[:, j] for j in cols])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ beta
    return float(r @ r)


@dataclass(frozen=True)
class SubsetRow:
    k: int
    variables: tuple[str, ...]
    rss: float
    cp: float
    bic: float
    adj_r2: float


@dataclass(frozen=True)
class SubsetReport:
    rows: tuple[SubsetRow, ...]
    n: int
    sigma2: float
    tss: float

    def best(self, k: int) -> SubsetRow:
        return self.rows[k]

    @property
    def selected(self) -> dict[str, int]:
        """Chosen model size per criterion (first k on ties)."""
        ks = [r.k for r in self.rows]
        pick = lambda vals: ks[int(np.argmin(vals))]
        return {
            "rss": pick([r.rss for r in self.rows]),
            "cp": pick([r.cp for r in self.rows]),
            "bic": pick([r.bic for r in self.rows]),
            "adj_r2": ks[int(np.argmax([r.adj_r2 for r in self.rows]))],
        }


def best_subsets(design: StandardizedDesign, use_raw: bool = False) -> SubsetReport:
    """For every size k = 0..p, the predictor set minimizing RSS.

    The binary response is regressed linearly on each subset (with intercept).
    sigma^2 is estimated from the full model, then

        Cp    = (RSS + 2 k sigma^2) / n
        BIC   = (RSS + ln(n) k sigma^2) / n
        adjR2 = 1 - (RSS / (n - k - 1)) / (TSS / (n - 1))

    Ties between equal-RSS subsets go to the earliest in combination order.
    """
    X = design.raw if use_raw else design.X
    y = design.y.astype(np.float64)
    n, p = X.shape
    if p > MAX_PREDICTORS:
        raise SubsetSizeError(f"{p} predictors; exhaustive search is capped at {MAX_PREDICTORS}")
    if n <= p + 1:
        raise RankError(f"n={n} observations cannot support a full model with p={p} predictors")
    tss = float(np.sum((y - y.mean()) ** 2))
    best: list[tuple[float, tuple[int, ...]]] = []
    for k in range(p + 1):
        cand = None
        for cols in itertools.combinations(range(p), k):
            r = _rss(X, y, cols)
            if cand is None or r < cand[0]:
                cand = (r, cols)
        best.append(cand)
    sigma2 = best[p][0] / (n - p - 1)
    rows = []
    for k, (rss, cols) in enumerate(best):
        rows.append(
            SubsetRow(
                k=k,
                variables=tuple(design.columns[j] for j in cols),
                rss=rss,
                cp=(rss + 2 * k * sigma2) / n,
                bic=(rss + math.log(n) * k * sigma2) / n,
                adj_r2=1.0 - (rss / (n - k - 1)) / (tss / (n - 1)) if tss > 0 else float("nan"),
            )
        )
    return SubsetReport(tuple(rows), n, sigma2, tss)


def write_subset_csv(report: SubsetReport, path: str | os.PathLike) -> None:
    """``k,variables,rss,cp,bic,adj_r2``; variables joined with ``+``."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "variables", "rss", "cp", "bic", "adj_r2"])
        for r in report.rows:
            w.writerow([r.k, "+".join(r.variables)] + [format(v, ".17g") for v in (r.rss, r.cp, r.bic, r.adj_r2)])
