"""Region labeling and the six scalar ROI features.

Features per image: area, perimeter, intensity standard deviation, skewness,
kurtosis (raw fourth standardized moment, 3 for a normal distribution) and
Shannon entropy in bits.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .errors import DegenerateDistributionError, NoRegionError
from .imgio import MAXVAL, GrayImage

FEATURE_COLUMNS = ("area", "perimeter", "stddev", "skewness", "kurtosis", "entropy")
CSV_COLUMNS = ("id",) + FEATURE_COLUMNS + ("label",)
THREE_PREDICTORS = ("entropy", "stddev", "perimeter")

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class Region:
    """An 8-connected set of pixels, optionally with the intensities under it.

    ``coords`` is an ``(N, 2)`` array of (row, col) in raster order.
    """

    coords: np.ndarray
    intensities: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2)
        if c.shape[0] == 0:
            raise ValueError("a region needs at least one pixel")
        object.__setattr__(self, "coords", c)
        if self.intensities is not None:
            v = np.asarray(self.intensities, dtype=np.float64).ravel()
            if v.size != c.shape[0]:
                raise ValueError("one intensity per pixel required")
            object.__setattr__(self, "intensities", v)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """(min row, min col, max row, max col), inclusive."""
        lo = self.coords.min(axis=0)
        hi = self.coords.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    def to_mask(self, pad: int = 0) -> np.ndarray:
        """Local boolean mask over the bounding box, with ``pad`` empty pixels around."""
        r0, c0, r1, c1 = self.bbox
        m = np.zeros((r1 - r0 + 1 + 2 * pad, c1 - c0 + 1 + 2 * pad), dtype=bool)
        m[self.coords[:, 0] - r0 + pad, self.coords[:, 1] - c0 + pad] = True
        return m

    def values(self) -> np.ndarray:
        if self.intensities is None:
            raise ValueError("region carries no intensities")
        return self.intensities


def label_components(mask: np.ndarray, image: GrayImage | np.ndarray | None = None) -> list[Region]:
    """Maximal 8-connected components of ``mask``.

    Regions come back ordered by their first pixel in raster order, i.e. by
    (min row, min col within that row).
    """
    mask = np.asarray(mask, dtype=bool)
    lab, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    pix = None
    if image is not None:
        pix = image.pixels if isinstance(image, GrayImage) else np.asarray(image)
        if pix.shape != mask.shape:
            raise ValueError("image and mask shapes differ")
    flat = lab.ravel()
    idx = np.flatnonzero(flat)
    # stable sort keeps raster order within each label
    order = np.argsort(flat[idx], kind="stable")
    idx = idx[order]
    bounds = np.searchsorted(flat[idx], np.arange(1, n + 2))
    regions = []
    w = mask.shape[1]
    for k in range(n):
        sel = idx[bounds[k] : bounds[k + 1]]
        coords = np.column_stack(np.divmod(sel, w))
        vals = pix.ravel()[sel] if pix is not None else None
        regions.append(Region(coords, vals))
    regions.sort(key=lambda r: (int(r.coords[0, 0]), int(r.coords[0, 1])))
    return regions


def area(region: Region) -> int:
    return int(region.coords.shape[0])


def perimeter(region: Region) -> int:
    """Number of unit pixel edges between the region and its complement.

    Counts outer and hole boundaries alike.
    """
    m = region.to_mask(pad=1).astype(np.int8)
    return int(np.abs(np.diff(m, axis=0)).sum() + np.abs(np.diff(m, axis=1)).sum())


def intensity_stats(region: Region) -> tuple[float, float, float]:
    """Population standard deviation, skewness m3/s^3 and kurtosis m4/s^4.

    Raises DegenerateDistributionError (with ``stddev`` = 0) when all
    intensities are equal.
    """
    v = region.values()
    d = v - v.mean()
    m2 = np.mean(d * d)
    if m2 == 0.0:
        raise DegenerateDistributionError("zero intensity variance in region", stddev=0.0)
    m3 = np.mean(d * d * d)
    m4 = np.mean((d * d) ** 2)
    sigma = math.sqrt(m2)
    return sigma, float(m3 / m2**1.5), float(m4 / (m2 * m2))


def entropy(region: Region, bins: int = 256) -> float:
    """Shannon entropy (bits) of the intensity histogram.

    Bins have equal width over the full 16-bit storage range.
    """
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    v = region.values().astype(np.int64)
    which = np.clip(v * bins // (MAXVAL + 1), 0, bins - 1)
    counts = np.bincount(which, minlength=bins)
    p = counts[counts > 0] / v.size
    h = -float(np.sum(p * np.log2(p)))
    return h if h > 0 else 0.0


def eccentricity(region: Region) -> float:
    """Eccentricity of the ellipse with the same second central moments.

    Not part of the default feature table.
    """
    c = region.coords.astype(np.float64)
    if c.shape[0] < 2:
        return 0.0
    cov = np.cov(c.T, bias=True)
    ev = np.sort(np.linalg.eigvalsh(cov))
    if ev[1] <= 0:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - ev[0] / ev[1]))


@dataclass
class FeatureRecord:
    id: str
    area: int
    perimeter: int
    stddev: float
    skewness: Optional[float]
    kurtosis: Optional[float]
    entropy: float
    label: Optional[int] = None

    def vector(self, columns: Iterable[str] = FEATURE_COLUMNS) -> list[float]:
        out = []
        for c in columns:
            v = getattr(self, c)
            out.append(float("nan") if v is None else float(v))
        return out


def extract_features(
    img: GrayImage,
    mask: np.ndarray,
    id: str,
    label: Optional[int] = None,
    bins: int = 256,
) -> FeatureRecord:
    """Features of the largest 8-connected region of ``mask`` (ties: first in raster order)."""
    regions = label_components(mask, img)
    if not regions:
        raise NoRegionError(f"{id}: mask has no foreground pixels")
    best = max(regions, key=area)  # max() keeps the first of equal areas
    try:
        sigma, skew, kurt = intensity_stats(best)
    except DegenerateDistributionError as exc:
        sigma, skew, kurt = exc.stddev, None, None
    return FeatureRecord(
        id=str(id),
        area=area(best),
        perimeter=perimeter(best),
        stddev=sigma,
        skewness=skew,
        kurtosis=kurt,
        entropy=entropy(best, bins),
        label=label,
    )


@dataclass
class FeatureTable:
    records: list[FeatureRecord] = field(default_factory=list)
    columns: tuple[str, ...] = FEATURE_COLUMNS

    def __post_init__(self):
        present = {r.label is not None for r in self.records}
        if len(present) > 1:
            raise ValueError("labels must be present on all records or on none")

    def __len__(self):
        return len(self.records)

    @property
    def has_labels(self) -> bool:
        return bool(self.records) and self.records[0].label is not None

    def matrix(self, columns: Iterable[str] | None = None) -> np.ndarray:
        cols = tuple(columns) if columns is not None else self.columns
        return np.array([r.vector(cols) for r in self.records], dtype=np.float64).reshape(len(self), len(cols))

    def labels(self) -> np.ndarray:
        if not self.has_labels:
            raise ValueError("feature table has no labels")
        return np.array([r.label for r in self.records], dtype=np.int64)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def subset(self, indices: Iterable[int]) -> "FeatureTable":
        return FeatureTable([self.records[i] for i in indices], self.columns)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_feature_csv(table: FeatureTable, path: str | os.PathLike) -> None:
    """Columns ``id,area,perimeter,stddev,skewness,kurtosis,entropy[,label]``.

    Kurtosis is the raw fourth standardized moment (normal = 3). Undefined
    skewness/kurtosis (constant region) are written as empty fields.
    """
    cols = CSV_COLUMNS if table.has_labels else CSV_COLUMNS[:-1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in table.records:
            w.writerow([r.id] + [_fmt(getattr(r, c)) for c in cols[1:]])


def read_feature_csv(path: str | os.PathLike) -> FeatureTable:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header not in (CSV_COLUMNS, CSV_COLUMNS[:-1]):
            raise ValueError(f"{path}: unexpected feature header {header}")
        has_label = header == CSV_COLUMNS
        records = []
        for row in reader:
            if not row:
                continue
            vals = dict(zip(header, row))

            def opt(name):
                s = vals[name]
                return float(s) if s != "" else None

            records.append(
                FeatureRecord(
                    id=vals["id"],
                    area=int(vals["area"]),
                    perimeter=int(vals["perimeter"]),
                    stddev=float(vals["stddev"]),
                    skewness=opt("skewness"),
                    kurtosis=opt("kurtosis"),
                    entropy=float(vals["entropy"]),
                    label=int(vals["label"]) if has_label else None,
                )
            )
    return FeatureTable(records)
