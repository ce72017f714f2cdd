"""Local binary and local ternary pattern maps over a 3x3 neighborhood.

Bit weights follow a fixed kernel (clockwise from the right-hand neighbor)::

    32  64 128
    16   C   1
     8   4   2

Only interior pixels (those with all eight neighbors) receive a code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyInputError, ParameterError
from .imageio import GrayImage, require_min_size

N_BINS = 256
DEFAULT_LTP_T = 5

# (dy, dx, weight) per neighbor
NEIGHBORS: tuple[tuple[int, int, int], ...] = (
    (0, 1, 1),
    (1, 1, 2),
    (1, 0, 4),
    (1, -1, 8),
    (0, -1, 16),
    (-1, -1, 32),
    (-1, 0, 64),
    (-1, 1, 128),
)

WEIGHT_KERNEL = np.array([[32, 64, 128], [16, 0, 1], [8, 4, 2]], dtype=np.int64)


@dataclass(frozen=True)
class NeighborhoodSpec:
    radius: int = 1
    neighbor_count: int = 8

    def __post_init__(self):
        if self.radius != 1 or self.neighbor_count != 8:
            raise ParameterError("only radius=1, neighbor_count=8 is supported")


@dataclass(frozen=True, eq=False)
class PatternMap:
    """Per-pixel codes for the interior region, shape ``(height - 2, width - 2)``."""

    codes: np.ndarray

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PatternMap):
            return NotImplemented
        return self.codes.shape == other.codes.shape and bool(np.array_equal(self.codes, other.codes))


@dataclass(frozen=True)
class LtpMaps:
    upper: PatternMap
    lower: PatternMap
    threshold_t: int


@dataclass(frozen=True, eq=False)
class PatternHistogram:
    bins: np.ndarray
    normalized: bool


def lbp_code(window) -> int:
    """LBP code of a single 3x3 window: neighbors >= center contribute their weight."""
    w = np.asarray(window, dtype=np.int64)
    if w.shape != (3, 3):
        raise DimensionError(f"expected a 3x3 window, got shape {w.shape}")
    return int(WEIGHT_KERNEL[w >= w[1, 1]].sum())


def _interior_differences(image: GrayImage):
    """Yield (neighbor - center, weight) over the interior for each neighbor."""
    require_min_size(image)
    px = image.pixels.astype(np.int16)
    h, w = px.shape
    center = px[1 : h - 1, 1 : w - 1]
    for dy, dx, weight in NEIGHBORS:
        neighbor = px[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        yield neighbor - center, weight


def lbp_map(image: GrayImage) -> PatternMap:
    require_min_size(image)
    codes = np.zeros((image.height - 2, image.width - 2), dtype=np.uint8)
    for diff, weight in _interior_differences(image):
        codes |= np.where(diff >= 0, weight, 0).astype(np.uint8)
    return PatternMap(codes)


def ltp_maps(image: GrayImage, t: int = DEFAULT_LTP_T) -> LtpMaps:
    """Split the ternary code into an upper map (diff >= t) and a lower map (diff <= -t)."""
    if t < 1:
        raise ParameterError(f"LTP threshold must be >= 1, got {t}")
    require_min_size(image)
    shape = (image.height - 2, image.width - 2)
    upper = np.zeros(shape, dtype=np.uint8)
    lower = np.zeros(shape, dtype=np.uint8)
    for diff, weight in _interior_differences(image):
        upper |= np.where(diff >= t, weight, 0).astype(np.uint8)
        lower |= np.where(diff <= -t, weight, 0).astype(np.uint8)
    return LtpMaps(PatternMap(upper), PatternMap(lower), t)


def histogram(pattern: PatternMap, normalize: bool = True) -> PatternHistogram:
    codes = np.asarray(pattern.codes)
    if codes.size == 0:
        raise EmptyInputError("cannot build a histogram of an empty pattern map")
    bins = np.bincount(codes.ravel(), minlength=N_BINS).astype(np.float64)
    if normalize:
        bins /= codes.size
    return PatternHistogram(bins, normalize)
