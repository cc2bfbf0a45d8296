"""Marker-controlled watershed segmentation of lung fields.

Pipeline: Sobel gradient magnitude as the segmentation function, an internal
marker that is confidently lung, an external marker that is confidently
background, a priority-flood watershed from both, and the union of the basins
grown from the internal marker as the final binary mask.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import SegmentationError
from .imgio import GrayImage

INTERNAL = 1
EXTERNAL = 2

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T.copy()
_CROSS = ndimage.generate_binary_structure(2, 1)


def _pixels(img) -> np.ndarray:
    return img.pixels if isinstance(img, GrayImage) else np.asarray(img)


def sobel_components(img: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """(Gx, Gy): correlation with the 3x3 Sobel kernels, replicate border.

    Gx is positive where intensity increases to the right, Gy where it
    increases downward.
    """
    a = _pixels(img).astype(np.float64)
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise ValueError(f"image {a.shape[1]}x{a.shape[0]} smaller than the 3x3 Sobel kernel")
    p = np.pad(a, 1, mode="edge")
    h, w = a.shape
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    for dr in range(3):
        for dc in range(3):
            win = p[dr : dr + h, dc : dc + w]
            if _SOBEL_X[dr, dc]:
                gx += _SOBEL_X[dr, dc] * win
            if _SOBEL_Y[dr, dc]:
                gy += _SOBEL_Y[dr, dc] * win
    return gx, gy


def sobel_gradient(img: GrayImage) -> np.ndarray:
    """Gradient magnitude sqrt(Gx^2 + Gy^2) as a float64 array."""
    gx, gy = sobel_components(img)
    return np.hypot(gx, gy)


def otsu_threshold(values: np.ndarray) -> float:
    """Otsu's threshold computed over the exact distinct values.

    Returns ``t`` such that the dark class is ``values <= t``. Working on the
    distinct values (rather than a fixed binning) keeps the split covariant
    with intensity scaling.
    """
    v, counts = np.unique(np.asarray(values).ravel(), return_counts=True)
    if v.size < 2:
        raise SegmentationError("image has a single intensity; no threshold exists")
    v = v.astype(np.float64)
    counts = counts.astype(np.float64)
    w0 = np.cumsum(counts)[:-1]
    s0 = np.cumsum(counts * v)[:-1]
    total, stotal = counts.sum(), (counts * v).sum()
    w1 = total - w0
    mu0 = s0 / w0
    mu1 = (stotal - s0) / w1
    between = w0 * w1 * (mu0 - mu1) ** 2
    return float(v[int(np.argmax(between))])


def make_internal_marker(
    img: GrayImage,
    max_components: int = 2,
    min_fraction: float = 0.1,
    erosion: int = 2,
) -> np.ndarray:
    """Pixels confidently inside the lung fields.

    Otsu split, keep the dark side, drop components touching the image border,
    keep the largest one or two components (the second only if it has at least
    ``min_fraction`` of the largest one's area), fill holes, then erode by
    ``erosion`` pixels so the marker sits strictly inside the dark region.
    """
    a = _pixels(img)
    dark = a <= otsu_threshold(a)
    lab, n = ndimage.label(dark, structure=_CROSS)
    if n:
        border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
        sizes = np.bincount(lab.ravel(), minlength=n + 1)
        sizes[border] = 0
        sizes[0] = 0
        # stable: equal areas resolved by label id (raster order)
        order = np.argsort(-sizes, kind="stable")
        keep = [int(i) for i in order[:max_components] if sizes[i] > 0]
        keep = [i for i in keep if sizes[i] >= min_fraction * sizes[keep[0]]]
    else:
        keep = []
    if not keep:
        raise SegmentationError("no dark interior component; not a chest slice?")
    marker = ndimage.binary_fill_holes(np.isin(lab, keep))
    if erosion > 0:
        marker = ndimage.binary_erosion(marker, structure=_CROSS, iterations=erosion)
    if not marker.any():
        raise SegmentationError("internal marker vanished after erosion")
    return marker


def dilation_ring(internal: np.ndarray, dilate: float) -> np.ndarray:
    """Inner boundary of the internal marker dilated by ``dilate`` pixels.

    A grown pixel is on the boundary when any of its 8 neighbours is not
    grown; that makes the ring 4-connected, so a 4-connected flood cannot slip
    through it diagonally. Pixels outside the image count as outside the
    dilation, so the ring is closed along the image border.
    """
    dist = ndimage.distance_transform_edt(~internal)
    grown = dist <= dilate
    interior = ndimage.binary_erosion(grown, structure=np.ones((3, 3), bool), border_value=0)
    return grown & ~interior


def make_external_marker(internal: np.ndarray, dilate: float = 10) -> np.ndarray:
    """Background marker for the watershed.

    Always contains the ring at distance ``dilate`` around the internal marker.
    When the internal marker has two or more components, the watershed ridge
    lines of the distance transform (the pixels equidistant between components)
    are added as well.
    """
    internal = np.asarray(internal, dtype=bool)
    if not internal.any():
        raise SegmentationError("internal marker is empty")
    if internal.all():
        raise SegmentationError("internal marker covers the whole image")
    external = dilation_ring(internal, dilate)
    comps, n = ndimage.label(internal, structure=_CROSS)
    if n >= 2:
        dist = ndimage.distance_transform_edt(~internal)
        external |= watershed(dist, comps).labels == 0
    external &= ~internal
    if not external.any():
        raise SegmentationError("no room for an external marker")
    return external


def marker_map(internal: np.ndarray, external: np.ndarray) -> np.ndarray:
    """0 = unknown, 1 = internal, 2 = external."""
    internal = np.asarray(internal, dtype=bool)
    external = np.asarray(external, dtype=bool)
    if (internal & external).any():
        raise ValueError("internal and external markers overlap")
    if not internal.any() or not external.any():
        raise ValueError("both markers must be non-empty")
    m = np.zeros(internal.shape, dtype=np.int32)
    m[internal] = INTERNAL
    m[external] = EXTERNAL
    return m


@dataclass(frozen=True)
class LabeledRegions:
    """Watershed output: 0 marks ridge pixels, >= 1 a catchment basin id."""

    labels: np.ndarray

    @property
    def count(self) -> int:
        return int(np.unique(self.labels[self.labels > 0]).size)

    @property
    def ridge(self) -> np.ndarray:
        return self.labels == 0


def watershed(grad: np.ndarray, markers: np.ndarray) -> LabeledRegions:
    """Priority-flood watershed with ridge lines, 4-connectivity.

    Non-marker pixels are flooded in ascending ``grad`` order; equal
    priorities go in insertion order, with the initial frontier inserted in
    raster order, so the result is fully deterministic. A pixel whose already
    labeled neighbours carry more than one label becomes ridge (0) and does
    not propagate.
    """
    grad = np.asarray(grad, dtype=np.float64)
    markers = np.asarray(markers)
    if grad.shape != markers.shape or grad.ndim != 2:
        raise ValueError(f"shape mismatch: gradient {grad.shape} vs markers {markers.shape}")
    if (markers < 0).any():
        raise ValueError("marker labels must be non-negative")
    if not (markers > 0).any():
        raise ValueError("watershed needs at least one marker label")

    h, w = grad.shape
    g = grad.ravel().tolist()
    lab = markers.astype(np.int64).ravel().tolist()
    queued = bytearray(h * w)
    heap: list[tuple[float, int, int]] = []
    counter = 0

    def nbrs(p):
        r, c = divmod(p, w)
        if r > 0:
            yield p - w
        if c > 0:
            yield p - 1
        if c < w - 1:
            yield p + 1
        if r < h - 1:
            yield p + w

    seeds = np.flatnonzero(markers.ravel() > 0).tolist()
    for p in seeds:
        queued[p] = 1
    for p in seeds:
        for q in nbrs(p):
            if not queued[q]:
                queued[q] = 1
                heapq.heappush(heap, (g[q], counter, q))
                counter += 1

    RIDGE = -1
    while heap:
        _, _, p = heapq.heappop(heap)
        found = 0
        for q in nbrs(p):
            lq = lab[q]
            if lq > 0:
                if found == 0:
                    found = lq
                elif lq != found:
                    found = RIDGE
                    break
        lab[p] = found
        if found == RIDGE:
            continue
        for q in nbrs(p):
            if not queued[q]:
                queued[q] = 1
                heapq.heappush(heap, (g[q], counter, q))
                counter += 1

    out = np.array(lab, dtype=np.int64).reshape(h, w)
    out[out < 0] = 0
    return LabeledRegions(out)


@dataclass(frozen=True)
class SegmentationResult:
    gradient: np.ndarray
    internal: np.ndarray
    external: np.ndarray
    markers: np.ndarray
    regions: LabeledRegions
    mask: np.ndarray


def segment_details(img: GrayImage, dilate: float = 10, **marker_kw) -> SegmentationResult:
    grad = sobel_gradient(img)
    internal = make_internal_marker(img, **marker_kw)
    external = make_external_marker(internal, dilate)
    markers = marker_map(internal, external)
    regions = watershed(grad, markers)
    mask = regions.labels == INTERNAL
    return SegmentationResult(grad, internal, external, markers, regions, mask)


def segment_lungs(img: GrayImage, dilate: float = 10, **marker_kw) -> np.ndarray:
    """Binary lung mask: union of the basins flooded from the internal marker."""
    return segment_details(img, dilate, **marker_kw).mask


def dice(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    denom = a.sum() + b.sum()
    if denom == 0:
        return 1.0
    return 2.0 * float((a & b).sum()) / float(denom)
