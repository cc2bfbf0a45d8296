"""Smoothing and contrast enhancement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imgio import MAXVAL, GrayImage


@dataclass(frozen=True)
class MedianWindow:
    m: int = 3  # rows
    n: int = 3  # columns

    def __post_init__(self):
        for name, v in (("m", self.m), ("n", self.n)):
            if not isinstance(v, (int, np.integer)) or v < 1 or v % 2 == 0:
                raise ValueError(f"median window {name}={v!r} must be a positive odd integer")

    @classmethod
    def parse(cls, text: str) -> "MedianWindow":
        """Parse ``"MxN"`` (e.g. ``"3x5"``)."""
        try:
            m, n = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"median window must look like MxN, got {text!r}") from None
        return cls(m, n)


def median_filter(img: GrayImage, window: MedianWindow = MedianWindow()) -> GrayImage:
    """m x n median filter with replicate (edge) padding.

    The window size is odd, so every output value is one of the input values
    inside its window.
    """
    if not isinstance(window, MedianWindow):
        window = MedianWindow(*window)
    pm, pn = window.m // 2, window.n // 2
    padded = np.pad(img.pixels, ((pm, pm), (pn, pn)), mode="edge")
    views = sliding_window_view(padded, (window.m, window.n))
    flat = views.reshape(img.height, img.width, window.m * window.n)
    k = (window.m * window.n) // 2
    out = np.partition(flat, k, axis=-1)[..., k]
    return GrayImage(out)


def equalization_levels(img: GrayImage, levels: int = 256) -> np.ndarray:
    """Output gray level (0..levels-1) for every pixel: round((L-1) * CDF(v))."""
    if levels < 2:
        raise ValueError(f"need at least 2 output levels, got {levels}")
    values, counts = np.unique(img.pixels, return_counts=True)
    cdf = np.cumsum(counts) / img.pixels.size
    # half-up rounding; np.round would round half to even
    lut = np.floor((levels - 1) * cdf + 0.5).astype(np.int64)
    idx = np.searchsorted(values, img.pixels)
    return lut[idx]


def equalize_histogram(img: GrayImage, levels: int = 256) -> GrayImage:
    """Global histogram equalization (no tiling, no clipping).

    Levels are rescaled onto the 16-bit storage range, so with ``levels=256``
    level ``k`` is stored as ``257 * k``.
    """
    lv = equalization_levels(img, levels)
    out = np.floor(lv * (MAXVAL / (levels - 1)) + 0.5)
    return GrayImage(out.astype(np.uint16))


def preprocess(img: GrayImage, window: MedianWindow = MedianWindow(), levels: int = 256) -> GrayImage:
    return equalize_histogram(median_filter(img, window), levels)
