"""Image decoding, grayscale conversion and patch tiling.

PGM (P2/P5) is parsed here directly; PNG decoding is delegated to Pillow and
only the raw channel data is used, so the luma rule below is applied
identically for every input format.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DatasetError, DimensionError, ImageFormatError

log = logging.getLogger(__name__)

MIN_SIDE = 3
DEFAULT_PATCH_SIZE = 128

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 8-bit grayscale image stored as a ``(height, width)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D pixel grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True)
class PatchSource:
    path: str
    row: int = 0
    col: int = 0

    def __str__(self):
        return f"{self.path}:{self.row}:{self.col}"


@dataclass(frozen=True)
class LabeledPatch:
    image: GrayImage
    label: str
    source: PatchSource = field(default_factory=lambda: PatchSource(""))


def require_min_size(image: GrayImage, what: str = "image") -> None:
    if image.width < MIN_SIDE or image.height < MIN_SIDE:
        raise DimensionError(
            f"{what} is {image.width}x{image.height}; at least {MIN_SIDE}x{MIN_SIDE} is required"
        )


def luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an ``(..., 3)`` uint8 array, rounded half-up.

    Integer arithmetic keeps the rounding exact: ``(299R + 587G + 114B + 500) // 1000``.
    """
    rgb = np.asarray(rgb, dtype=np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return y.astype(np.uint8)


def _pgm_tokens(data: bytes):
    """Yield (token, end_offset) pairs from a PGM header, skipping comments."""
    i, n = 0, len(data)
    while i < n:
        c = data[i : i + 1]
        if c == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
                i += 1
            yield data[start:i], i


def decode_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError("not a P2/P5 PGM file")
    tokens = _pgm_tokens(data)
    try:
        next(tokens)
        width = int(next(tokens)[0])
        height = int(next(tokens)[0])
        maxval_tok, header_end = next(tokens)
        maxval = int(maxval_tok)
    except (StopIteration, ValueError) as exc:
        raise ImageFormatError("truncated or malformed PGM header") from exc
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"PGM maxval {maxval} unsupported (only 8-bit, maxval <= 255)")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[header_end + 1 : header_end + 1 + count]
        if len(raster) != count:
            raise ImageFormatError(f"PGM raster has {len(raster)} bytes, expected {count}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        try:
            values = np.array(data[header_end:].split(), dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError("non-numeric sample in ASCII PGM") from exc
        if values.size < count:
            raise ImageFormatError(f"ASCII PGM has {values.size} samples, expected {count}")
        values = values[:count]
    if values.size and values.max() > maxval:
        raise ImageFormatError("PGM sample exceeds maxval")
    if maxval != 255:
        values = (values * 255 + maxval // 2) // maxval
    return values.reshape(height, width).astype(np.uint8)


def decode_png(path: os.PathLike | str) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        im.load()
        mode = im.mode
        if mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            mode = im.mode
        elif mode == "1":
            im = im.convert("L")
            mode = "L"
        if mode in ("L", "LA"):
            arr = np.asarray(im.getchannel(0), dtype=np.uint8)
            return arr.copy()
        if mode in ("RGB", "RGBA"):
            arr = np.asarray(im, dtype=np.uint8)
            return luma(arr[..., :3])
    raise ImageFormatError(f"unsupported PNG pixel mode {mode!r} (16-bit input is not supported)")


def load_gray(path: os.PathLike | str) -> GrayImage:
    """Decode a PGM or PNG file into a :class:`GrayImage`."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head.startswith(_PNG_MAGIC):
        pixels = decode_png(path)
    elif head[:2] in (b"P2", b"P5"):
        pixels = decode_pgm(path.read_bytes())
    else:
        raise ImageFormatError(f"{path}: unsupported image format (expected PGM or PNG)")
    image = GrayImage(pixels)
    require_min_size(image, str(path))
    return image


def tile(
    image: GrayImage,
    patch_size: int = DEFAULT_PATCH_SIZE,
    label: str = "",
    source_path: str = "",
) -> list[LabeledPatch]:
    """Cut ``image`` into non-overlapping square patches in row-major grid order.

    Remainder rows/columns are discarded; an image smaller than one patch
    yields an empty list.
    """
    if patch_size < MIN_SIDE:
        raise DimensionError(f"patch_size must be >= {MIN_SIDE}, got {patch_size}")
    rows = image.height // patch_size
    cols = image.width // patch_size
    patches = []
    for r in range(rows):
        for c in range(cols):
            block = image.pixels[
                r * patch_size : (r + 1) * patch_size, c * patch_size : (c + 1) * patch_size
            ]
            patches.append(LabeledPatch(GrayImage(block), label, PatchSource(source_path, r, c)))
    return patches


def _class_dirs(root: Path) -> Iterable[Path]:
    return sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: p.name)


def ingest_dataset(root: os.PathLike | str, patch_size: int = DEFAULT_PATCH_SIZE) -> list[LabeledPatch]:
    """Load ``root/<class>/<image>`` files and tile them into labeled patches.

    Ordering is lexicographic by class, then file name, then patch grid
    position. Undecodable files are skipped with a warning, as are classes
    that end up without any patches.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    patches: list[LabeledPatch] = []
    for class_dir in _class_dirs(root):
        label = class_dir.name
        class_patches = []
        for file in sorted((p for p in class_dir.iterdir() if p.is_file()), key=lambda p: p.name):
            try:
                image = load_gray(file)
            except (ImageFormatError, DimensionError, OSError) as exc:
                log.warning("skipping %s: %s", file, exc)
                continue
            rel = f"{label}/{file.name}"
            class_patches.extend(tile(image, patch_size, label, rel))
        if not class_patches:
            log.warning("class %r has no usable images at patch size %d; skipped", label, patch_size)
            continue
        patches.extend(class_patches)
    if not patches:
        raise DatasetError(f"no labeled patches found under {root}")
    return patches


def write_pgm(path: os.PathLike | str, image: GrayImage | np.ndarray) -> None:
    """Write a binary (P5) PGM. Used for fixtures and tests."""
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
