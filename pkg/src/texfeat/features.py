"""The 808-dimensional joint descriptor, z-score scaling and CSV persistence.

Vector layout (see ``FEATURE_NAMES``)::

    [0, 256)    LBP histogram
    [256, 512)  LTP upper histogram
    [512, 768)  LTP lower histogram
    [768, 808)  GLCM stats, by direction (0..315 deg) then by stat
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import glcm as glcm_mod
from .errors import ConfigMismatchError, FeatureFormatError, ParameterError, StatisticsError
from .imageio import GrayImage, LabeledPatch
from .patterns import DEFAULT_LTP_T, N_BINS, histogram, lbp_map, ltp_maps

FORMAT_VERSION = 1
N_FEATURES = 3 * N_BINS + len(glcm_mod.ANGLES) * len(glcm_mod.STAT_NAMES)
DEV_FLOOR = 1e-12

BLOCKS: dict[str, slice] = {
    "lbp": slice(0, 256),
    "ltp": slice(256, 768),
    "ltp_upper": slice(256, 512),
    "ltp_lower": slice(512, 768),
    "glcm": slice(768, 808),
    "all": slice(0, 808),
}

FEATURE_NAMES: tuple[str, ...] = (
    tuple(f"lbp_{b}" for b in range(N_BINS))
    + tuple(f"ltp_upper_{b}" for b in range(N_BINS))
    + tuple(f"ltp_lower_{b}" for b in range(N_BINS))
    + tuple(f"glcm_{a}_{s}" for a in glcm_mod.ANGLES for s in glcm_mod.STAT_NAMES)
)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

assert len(FEATURE_NAMES) == N_FEATURES == 808


@dataclass(frozen=True)
class ExtractionConfig:
    ltp_t: int = DEFAULT_LTP_T
    glcm_levels: int = glcm_mod.DEFAULT_LEVELS
    glcm_distance: int = glcm_mod.DEFAULT_DISTANCE
    histogram_normalize: bool = True
    variance_mode: str = "paper"

    def __post_init__(self):
        if self.ltp_t < 1:
            raise ParameterError(f"ltp_t must be >= 1, got {self.ltp_t}")
        if not 2 <= self.glcm_levels <= 256:
            raise ParameterError(f"glcm_levels must be in [2, 256], got {self.glcm_levels}")
        if self.glcm_distance < 1:
            raise ParameterError(f"glcm_distance must be >= 1, got {self.glcm_distance}")
        if self.variance_mode not in glcm_mod.VARIANCE_MODES:
            raise ParameterError(f"unknown variance_mode {self.variance_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionConfig":
        return cls(
            ltp_t=int(d["ltp_t"]),
            glcm_levels=int(d["glcm_levels"]),
            glcm_distance=int(d["glcm_distance"]),
            histogram_normalize=bool(d["histogram_normalize"]),
            variance_mode=str(d["variance_mode"]),
        )


def extract(patch: LabeledPatch | GrayImage, cfg: ExtractionConfig = ExtractionConfig()) -> np.ndarray:
    """Compute the 808-value descriptor of one patch."""
    image = patch.image if isinstance(patch, LabeledPatch) else patch
    ltp = ltp_maps(image, cfg.ltp_t)
    hists = [
        histogram(lbp_map(image), cfg.histogram_normalize).bins,
        histogram(ltp.upper, cfg.histogram_normalize).bins,
        histogram(ltp.lower, cfg.histogram_normalize).bins,
    ]
    quantized = glcm_mod.quantize(image, cfg.glcm_levels)
    mats = glcm_mod.glcm_all_directions(quantized, cfg.glcm_distance, cfg.glcm_levels)
    glcm_block = [v for g in mats for v in glcm_mod.stats(g, cfg.variance_mode).as_tuple()]
    return np.concatenate(hists + [np.asarray(glcm_block, dtype=np.float64)])


@dataclass(eq=False)
class FeatureTable:
    labels: list[str]
    sources: list[str]
    values: np.ndarray
    config: ExtractionConfig = field(default_factory=ExtractionConfig)
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.labels), -1)
        if len(self.sources) != len(self.labels):
            raise ValueError("labels and sources differ in length")

    def __len__(self):
        return len(self.labels)

    def subset(self, rows: Sequence[int]) -> "FeatureTable":
        rows = list(rows)
        return FeatureTable(
            [self.labels[r] for r in rows],
            [self.sources[r] for r in rows],
            self.values[rows],
            self.config,
            dict(self.extra),
        )

    def with_values(self, values: np.ndarray) -> "FeatureTable":
        return replace(self, values=values, extra=dict(self.extra))

    def __eq__(self, other):
        if not isinstance(other, FeatureTable):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.sources == other.sources
            and self.config == other.config
            and self.extra == other.extra
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )


def extract_table(
    patches: Iterable[LabeledPatch], cfg: ExtractionConfig = ExtractionConfig(), jobs: int = 1
) -> FeatureTable:
    """Extract every patch; row order follows the input order regardless of ``jobs``."""
    patches = list(patches)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda p: extract(p, cfg), patches))
    else:
        rows = [extract(p, cfg) for p in patches]
    values = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return FeatureTable([p.label for p in patches], [str(p.source) for p in patches], values, cfg)


@dataclass(frozen=True, eq=False)
class Standardization:
    mean: np.ndarray
    dev: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        centered = values - self.mean
        scale = np.where(self.dev < DEV_FLOOR, 1.0, self.dev)
        return centered / scale


def fit_standardization(values: np.ndarray) -> Standardization:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2:
        raise StatisticsError("standardization needs at least 2 rows")
    return Standardization(values.mean(axis=0), values.std(axis=0))


def standardize(table: FeatureTable) -> tuple[FeatureTable, Standardization]:
    """Z-score every dimension with the table's own population mean/deviation.

    Dimensions whose deviation is below 1e-12 are only centered.
    """
    stats = fit_standardization(table.values)
    return table.with_values(stats.apply(table.values)), stats


# --- CSV -------------------------------------------------------------------

_CONFIG_KEYS = ("ltp_t", "glcm_levels", "glcm_distance", "histogram_normalize", "variance_mode")


def _fmt_meta(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def metadata_lines(cfg: ExtractionConfig, extra: dict[str, str] | None = None) -> list[str]:
    lines = [f"# texfeat-format={FORMAT_VERSION}"]
    lines += [f"# {k}={_fmt_meta(getattr(cfg, k))}" for k in _CONFIG_KEYS]
    lines += [f"# {k}={v}" for k, v in (extra or {}).items()]
    return lines


def write_csv(table: FeatureTable, path: os.PathLike | str) -> None:
    if table.values.shape[1] != N_FEATURES:
        raise FeatureFormatError(f"table has {table.values.shape[1]} columns, expected {N_FEATURES}")
    buf = io.StringIO()
    for line in metadata_lines(table.config, table.extra):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "source"] + [f"f{i}" for i in range(N_FEATURES)])
    for label, source, row in zip(table.labels, table.sources, table.values):
        writer.writerow([label, source] + [repr(float(v)) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _parse_bool(text: str, where: str) -> bool:
    if text in ("true", "false"):
        return text == "true"
    raise FeatureFormatError(f"{where}: expected true/false, got {text!r}")


def read_csv(path: os.PathLike | str) -> FeatureTable:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines(keepends=True)
    meta: dict[str, str] = {}
    n_meta = 0
    for n_meta, line in enumerate(lines):
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" not in body:
            raise FeatureFormatError(f"{path}:{n_meta + 1}: malformed metadata line {line.rstrip()!r}")
        key, value = body.split("=", 1)
        meta[key.strip()] = value.strip()
    else:
        n_meta = len(lines)

    version = meta.pop("texfeat-format", None)
    if version is None:
        raise FeatureFormatError(f"{path}: missing '# texfeat-format' header")
    if version != str(FORMAT_VERSION):
        raise FeatureFormatError(f"{path}: format version {version} unsupported (expected {FORMAT_VERSION})")
    missing = [k for k in _CONFIG_KEYS if k not in meta]
    if missing:
        raise FeatureFormatError(f"{path}: missing metadata keys {missing}")
    try:
        cfg = ExtractionConfig(
            ltp_t=int(meta.pop("ltp_t")),
            glcm_levels=int(meta.pop("glcm_levels")),
            glcm_distance=int(meta.pop("glcm_distance")),
            histogram_normalize=_parse_bool(meta.pop("histogram_normalize"), f"{path}: histogram_normalize"),
            variance_mode=meta.pop("variance_mode"),
        )
    except (ValueError, ParameterError) as exc:
        raise FeatureFormatError(f"{path}: bad metadata value: {exc}") from exc

    reader = csv.reader(lines[n_meta:])
    header = next(reader, None)
    expected = ["label", "source"] + [f"f{i}" for i in range(N_FEATURES)]
    if header != expected:
        got = "missing" if header is None else f"{len(header)} columns starting {header[:3]}"
        raise FeatureFormatError(f"{path}:{n_meta + 1}: bad column header ({got})")

    labels, sources, rows = [], [], []
    for offset, rec in enumerate(reader):
        lineno = n_meta + 2 + offset
        if not rec:
            continue
        if len(rec) != len(expected):
            raise FeatureFormatError(f"{path}:{lineno}: {len(rec)} columns, expected {len(expected)}")
        try:
            rows.append([float(v) for v in rec[2:]])
        except ValueError:
            bad = next(i for i, v in enumerate(rec[2:]) if not _is_float(v))
            raise FeatureFormatError(
                f"{path}:{lineno}: column f{bad} is not a number: {rec[2 + bad]!r}"
            ) from None
        labels.append(rec[0])
        sources.append(rec[1])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    return FeatureTable(labels, sources, values, cfg, meta)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def require_same_config(a: ExtractionConfig, b: ExtractionConfig, what: str = "features") -> None:
    if a != b:
        raise ConfigMismatchError(f"{what} were extracted with {a.to_dict()}, expected {b.to_dict()}")
