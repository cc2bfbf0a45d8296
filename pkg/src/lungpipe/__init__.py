"""Lung CT slice analysis: preprocessing, marker-controlled watershed
segmentation, ROI features and a suite of classical classifiers."""

__version__ = "0.1.0"

from .features import FEATURE_COLUMNS, THREE_PREDICTORS, FeatureRecord, FeatureTable, extract_features
from .imgio import GrayImage, PhantomSpec, generate_phantom, load_image, save_image
from .prep import MedianWindow, equalize_histogram, median_filter
from .segment import segment_lungs, sobel_gradient, watershed
