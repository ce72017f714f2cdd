"""Directional gray-level co-occurrence matrices and their summary statistics."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateImageError, ParameterError
from .imageio import GrayImage

DEFAULT_LEVELS = 256
DEFAULT_DISTANCE = 1

ANGLES = (0, 45, 90, 135, 180, 225, 270, 315)
# (dx, dy) per angle; dy grows downward, so 90 degrees points up a row.
UNIT_OFFSETS = ((1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1))

STAT_NAMES = ("energy", "contrast", "homogeneity", "entropy", "variance")
VARIANCE_MODES = ("paper", "standard")


@dataclass(frozen=True)
class Offset:
    dx: int
    dy: int

    def __neg__(self) -> "Offset":
        return Offset(-self.dx, -self.dy)


def direction_offsets(distance: int = DEFAULT_DISTANCE) -> list[Offset]:
    if distance < 1:
        raise ParameterError(f"GLCM distance must be >= 1, got {distance}")
    return [Offset(dx * distance, dy * distance) for dx, dy in UNIT_OFFSETS]


@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    counts: np.ndarray
    offset: Offset | None

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def normalized(self) -> np.ndarray:
        total = self.total
        if total == 0:
            raise DegenerateImageError("GLCM holds no pairs")
        return self.counts / total


@dataclass(frozen=True)
class GlcmStats:
    energy: float
    contrast: float
    homogeneity: float
    entropy: float
    variance: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.energy, self.contrast, self.homogeneity, self.entropy, self.variance)


def _check_levels(levels: int) -> None:
    if not 2 <= levels <= 256:
        raise ParameterError(f"gray levels must be in [2, 256], got {levels}")


def quantize(image: GrayImage, levels: int = DEFAULT_LEVELS) -> GrayImage:
    """Map intensity v to floor(v * levels / 256)."""
    _check_levels(levels)
    if levels == 256:
        return image
    q = (image.pixels.astype(np.int64) * levels) // 256
    return GrayImage(q.astype(np.uint8))


def glcm(image: GrayImage, offset: Offset, levels: int = DEFAULT_LEVELS) -> Glcm:
    """Ordered-pair co-occurrence counts: counts[i, j] for I(x, y) = i, I(x+dx, y+dy) = j."""
    _check_levels(levels)
    px = image.pixels
    if px.size and int(px.max()) >= levels:
        raise ParameterError(f"image holds value {int(px.max())} but only {levels} levels were requested")
    h, w = px.shape
    dx, dy = offset.dx, offset.dy
    x0, x1 = max(0, -dx), w - max(0, dx)
    y0, y1 = max(0, -dy), h - max(0, dy)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateImageError(
            f"{w}x{h} image has no pixel pairs at offset ({dx}, {dy})"
        )
    ref = px[y0:y1, x0:x1].astype(np.int64)
    nbr = px[y0 + dy : y1 + dy, x0 + dx : x1 + dx].astype(np.int64)
    flat = np.bincount((ref * levels + nbr).ravel(), minlength=levels * levels)
    return Glcm(levels, flat.reshape(levels, levels), offset)


def glcm_all_directions(
    image: GrayImage, distance: int = DEFAULT_DISTANCE, levels: int = DEFAULT_LEVELS
) -> list[Glcm]:
    """One matrix per angle in ANGLES order (0, 45, ..., 315 degrees)."""
    return [glcm(image, off, levels) for off in direction_offsets(distance)]


def isotropic_glcm(
    image: GrayImage, distance: int = DEFAULT_DISTANCE, levels: int = DEFAULT_LEVELS
) -> Glcm:
    """Sum of the eight directional count matrices."""
    mats = glcm_all_directions(image, distance, levels)
    return Glcm(levels, sum(m.counts for m in mats), None)


@lru_cache(maxsize=8)
def _index_grids(levels: int):
    i, j = np.indices((levels, levels), dtype=np.float64)
    sq = (i - j) ** 2
    sq.setflags(write=False)
    inv = 1.0 / (1.0 + sq)
    inv.setflags(write=False)
    return i, sq, inv


def stats(g: Glcm, variance_mode: str = "paper") -> GlcmStats:
    """Energy, contrast, homogeneity, entropy and variance of the normalized matrix.

    ``variance_mode="paper"`` uses sum((i - j)^2 K), which coincides with
    contrast. ``"standard"`` uses sum((i - mu)^2 K) with mu the mean of the
    row marginal.
    """
    if variance_mode not in VARIANCE_MODES:
        raise ParameterError(f"variance_mode must be one of {VARIANCE_MODES}, got {variance_mode!r}")
    k = g.normalized
    i, sq, inv = _index_grids(g.levels)
    energy = float(np.sum(k * k))
    contrast = float(np.sum(k * sq))
    homogeneity = float(np.sum(k * inv))
    nz = k[k > 0]
    entropy = float(-np.sum(nz * np.log(nz))) + 0.0  # no -0.0
    if variance_mode == "paper":
        variance = float(np.sum(sq * k))
    else:
        mu = float(np.sum(i * k))
        variance = float(np.sum((i - mu) ** 2 * k))
    return GlcmStats(energy, contrast, homogeneity, entropy, variance)
