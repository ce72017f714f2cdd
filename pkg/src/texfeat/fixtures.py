"""Deterministic synthetic texture corpus used for tests and the ablation demo.

Ten classes: sinusoidal gratings at several frequencies/orientations, a plaid,
two checkerboards and three noise fields with different correlation lengths.
Every image gets additive Gaussian noise so no class is pixel-perfect.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .imageio import write_pgm

FIXTURE_SEED = 20240601
FIXTURE_SIZE = 640


def _grating(yy, xx, period, angle_deg):
    theta = np.deg2rad(angle_deg)
    return np.sin(2 * np.pi * (xx * np.cos(theta) + yy * np.sin(theta)) / period)


def _checker(yy, xx, cell):
    return np.where(((yy // cell) + (xx // cell)) % 2 == 0, 1.0, -1.0)


def _smooth_noise(rng, shape, corr_len):
    """White noise low-passed by a Gaussian of width ``corr_len`` (FFT, periodic)."""
    white = rng.standard_normal(shape)
    if corr_len <= 0:
        return white
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    kernel = np.exp(-2 * (np.pi * corr_len) ** 2 * (fx**2 + fy**2))
    field = np.real(np.fft.ifft2(np.fft.fft2(white) * kernel))
    return field / field.std()


def _to_uint8(signal, mean=128.0, amplitude=60.0):
    return np.clip(np.rint(mean + amplitude * signal), 0, 255).astype(np.uint8)


CLASS_NAMES = (
    "checker_08",
    "checker_16",
    "grating_p06_a000",
    "grating_p12_a090",
    "grating_p10_a045",
    "grating_p20_a135",
    "noise_c0",
    "noise_c2",
    "noise_c6",
    "plaid_p14",
)


def synth_texture(name: str, size: int = FIXTURE_SIZE, seed: int = FIXTURE_SEED) -> np.ndarray:
    """Render one class image; ``name`` must be in ``CLASS_NAMES``."""
    idx = CLASS_NAMES.index(name)
    rng = np.random.default_rng([seed, idx])
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    kind = name.split("_")[0]
    if kind == "checker":
        signal = _checker(yy, xx, int(name.split("_")[1])) * 0.8
    elif kind == "grating":
        _, p, a = name.split("_")
        signal = _grating(yy, xx, float(p[1:]), float(a[1:]))
    elif kind == "plaid":
        period = float(name.split("_")[1][1:])
        signal = 0.5 * (_grating(yy, xx, period, 30) + _grating(yy, xx, period, 120))
    elif kind == "noise":
        signal = _smooth_noise(rng, (size, size), float(name.split("_")[1][1:])) * 0.7
    else:
        raise ValueError(f"unknown fixture class {name!r}")
    noise = rng.standard_normal((size, size)) * 0.85
    return _to_uint8(signal + noise)


def make_fixture_corpus(root: os.PathLike | str, size: int = FIXTURE_SIZE, seed: int = FIXTURE_SEED) -> Path:
    """Write ``root/<class>/<class>.pgm`` for every fixture class and return ``root``."""
    root = Path(root)
    for name in CLASS_NAMES:
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        write_pgm(class_dir / f"{name}.pgm", synth_texture(name, size, seed))
    return root
