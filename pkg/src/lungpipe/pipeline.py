"""Image-to-features path: smoothing, enhancement, segmentation, extraction."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .features import FeatureRecord, FeatureTable, extract_features
from .imgio import DatasetManifest, GrayImage, load_image
from .prep import MedianWindow, equalize_histogram, median_filter
from .segment import SegmentationResult, segment_details


@dataclass
class PreprocessParams:
    median: tuple[int, int] = (3, 3)
    levels: int = 256
    # Otsu on an equalized image degenerates to a median split once
    # intensities are continuous, so segmentation sees the smoothed image
    # unless this is switched on.
    equalize_before_segment: bool = False


@dataclass
class SegmentParams:
    dilate: float = 10.0
    erosion: int = 2
    max_components: int = 2
    min_fraction: float = 0.1


@dataclass
class FeatureParams:
    bins: int = 256
    # intensities for the statistics: "smoothed" or "original"
    source: str = "smoothed"


@dataclass
class ImagePipeline:
    preprocess: PreprocessParams = field(default_factory=PreprocessParams)
    segment: SegmentParams = field(default_factory=SegmentParams)
    features: FeatureParams = field(default_factory=FeatureParams)

    @classmethod
    def from_dict(cls, d: dict | None) -> "ImagePipeline":
        d = d or {}
        pre = dict(d.get("preprocess", {}))
        if "median" in pre:
            pre["median"] = tuple(pre["median"])
        return cls(
            PreprocessParams(**pre),
            SegmentParams(**d.get("segment", {})),
            FeatureParams(**d.get("features", {})),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["preprocess"]["median"] = list(self.preprocess.median)
        return d

    def smooth(self, img: GrayImage) -> GrayImage:
        return median_filter(img, MedianWindow(*self.preprocess.median))

    def enhance(self, img: GrayImage) -> GrayImage:
        return equalize_histogram(img, self.preprocess.levels)

    def segment_image(self, img: GrayImage) -> tuple[GrayImage, SegmentationResult]:
        """Returns the smoothed image and the segmentation of the pipeline's chosen input."""
        smoothed = self.smooth(img)
        target = self.enhance(smoothed) if self.preprocess.equalize_before_segment else smoothed
        s = self.segment
        res = segment_details(
            target, s.dilate, erosion=s.erosion, max_components=s.max_components, min_fraction=s.min_fraction
        )
        return smoothed, res

    def features_for(self, img: GrayImage, id: str, label: int | None = None) -> tuple[FeatureRecord, np.ndarray]:
        smoothed, res = self.segment_image(img)
        source = smoothed if self.features.source == "smoothed" else img
        return extract_features(source, res.mask, id, label, self.features.bins), res.mask

    def run_manifest(self, manifest: DatasetManifest) -> FeatureTable:
        records = []
        for entry in manifest.entries:
            img = load_image(manifest.resolve(entry))
            rec, _ = self.features_for(img, entry.path, entry.label)
            records.append(rec)
        return FeatureTable(records)
