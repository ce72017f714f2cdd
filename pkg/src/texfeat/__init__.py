"""Joint LBP + LTP + multi-direction GLCM texture descriptor and classifiers."""

from .errors import TexfeatError
from .features import FEATURE_NAMES, N_FEATURES, ExtractionConfig, FeatureTable, extract
from .imageio import GrayImage, LabeledPatch, load_gray

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "FEATURE_NAMES",
    "FeatureTable",
    "GrayImage",
    "LabeledPatch",
    "N_FEATURES",
    "TexfeatError",
    "extract",
    "load_gray",
]
