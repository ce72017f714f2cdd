"""Stratified splitting, KNN and Gaussian naive Bayes, evaluation, model files."""

from __future__ import annotations

import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelFormatError, ParameterError, SplitError
from .features import (
    BLOCKS,
    ExtractionConfig,
    FeatureTable,
    Standardization,
    fit_standardization,
    require_same_config,
)

MODEL_FORMAT_VERSION = 1
METRICS = ("euclidean", "manhattan")
NB_VARIANCE_FLOOR = 1e-9


# --- splitting ---------------------------------------------------------------

def _fisher_yates(items: list, bitgen: np.random.PCG64) -> list:
    # j = raw % (i + 1); the modulo bias on 64-bit draws is negligible and keeps the rule simple
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        j = int(bitgen.random_raw()) % (i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def stratified_split(
    table: FeatureTable, train_fraction: float = 0.5, seed: int = 42
) -> tuple[FeatureTable, FeatureTable]:
    """Per-class split putting ceil(n * train_fraction) rows of each class in train.

    The shuffle is a Fisher-Yates pass driven by raw 64-bit draws from
    ``numpy.random.PCG64(seed)`` (j = draw mod (i + 1), i descending), applied
    to each class's rows in table order, classes visited in lexicographic
    order with one generator shared across classes. Both outputs keep the
    original row order of ``table``.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    by_class: dict[str, list[int]] = defaultdict(list)
    for idx, label in enumerate(table.labels):
        by_class[label].append(idx)
    small = sorted(c for c, rows in by_class.items() if len(rows) < 2)
    if small:
        raise SplitError(f"class {small[0]!r} has fewer than 2 samples")

    bitgen = np.random.PCG64(seed)
    train_rows: list[int] = []
    for label in sorted(by_class):
        rows = _fisher_yates(by_class[label], bitgen)
        n_train = math.ceil(round(len(rows) * train_fraction, 9))
        train_rows.extend(rows[:n_train])
    train_set = set(train_rows)
    train_idx = sorted(train_set)
    test_idx = [i for i in range(len(table)) if i not in train_set]

    extra = {"split_seed": str(seed)}
    train, test = table.subset(train_idx), table.subset(test_idx)
    train.extra.update(extra)
    test.extra.update(extra)
    return train, test


# --- models ------------------------------------------------------------------

@dataclass(eq=False)
class _ModelBase:
    config: ExtractionConfig
    standardization: Standardization
    block: str
    split_seed: int | None = field(default=None, kw_only=True)
    train_meta: dict[str, str] = field(default_factory=dict, kw_only=True)

    def prepare(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return self.standardization.apply(values[..., BLOCKS[self.block]])


@dataclass(eq=False)
class KnnModel(_ModelBase):
    vectors: np.ndarray
    labels: list[str]
    k: int = 3
    metric: str = "euclidean"
    kind = "knn"

    def distances(self, query: np.ndarray) -> np.ndarray:
        diff = self.vectors - query
        if self.metric == "manhattan":
            return np.abs(diff).sum(axis=1)
        return np.sqrt((diff * diff).sum(axis=1))

    def predict(self, vector: np.ndarray) -> str:
        return knn_predict(self, vector)


@dataclass(eq=False)
class NaiveBayesModel(_ModelBase):
    classes: list[str]
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    variance_floor: float = NB_VARIANCE_FLOOR
    kind = "naive_bayes"

    def scores(self, x: np.ndarray) -> np.ndarray:
        log_lik = -0.5 * np.log(2 * np.pi * self.variances) - (x - self.means) ** 2 / (2 * self.variances)
        return np.log(self.priors) + log_lik.sum(axis=1)

    def predict(self, vector: np.ndarray) -> str:
        return nb_predict(self, vector)


TrainedModel = KnnModel | NaiveBayesModel


def _block_values(table: FeatureTable, block: str) -> np.ndarray:
    if block not in BLOCKS:
        raise ParameterError(f"unknown feature block {block!r}; choose from {sorted(BLOCKS)}")
    return table.values[:, BLOCKS[block]]


def _seed_of(table: FeatureTable) -> int | None:
    seed = table.extra.get("split_seed")
    return int(seed) if seed is not None else None


def knn_train(
    train: FeatureTable, k: int = 3, metric: str = "euclidean", block: str = "all"
) -> KnnModel:
    n = len(train)
    if n == 0:
        raise ParameterError("training set is empty")
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"k must be odd and >= 1, got {k}")
    if k > n:
        raise ParameterError(f"k={k} exceeds the training set size {n}")
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}; choose from {METRICS}")
    values = _block_values(train, block)
    std = fit_standardization(values)
    return KnnModel(
        train.config, std, block, std.apply(values), list(train.labels), k, metric,
        split_seed=_seed_of(train), train_meta=dict(train.extra),
    )


def knn_predict(model: KnnModel, vector: np.ndarray) -> str:
    """Majority label among the k nearest standardized training vectors.

    Equal distances keep the earlier training row; a vote tie goes to the
    class with the smaller summed neighbor distance, then the smaller label.
    """
    dist = model.distances(model.prepare(vector))
    nearest = np.argsort(dist, kind="stable")[: model.k]
    votes: dict[str, list] = {}
    for idx in nearest:
        entry = votes.setdefault(model.labels[idx], [0, 0.0])
        entry[0] += 1
        entry[1] += float(dist[idx])
    return min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], lab))


def nb_train(train: FeatureTable, block: str = "all", variance_floor: float = NB_VARIANCE_FLOOR) -> NaiveBayesModel:
    """Gaussian naive Bayes on standardized features."""
    if len(train) == 0:
        raise ParameterError("training set is empty")
    values = _block_values(train, block)
    std = fit_standardization(values)
    x = std.apply(values)
    labels = np.asarray(train.labels, dtype=object)
    classes = sorted(set(train.labels))
    priors, means, variances = [], [], []
    for c in classes:
        rows = x[labels == c]
        priors.append(rows.shape[0] / x.shape[0])
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), variance_floor))
    return NaiveBayesModel(
        train.config, std, block, classes, np.array(priors), np.vstack(means), np.vstack(variances),
        variance_floor, split_seed=_seed_of(train), train_meta=dict(train.extra),
    )


def nb_predict(model: NaiveBayesModel, vector: np.ndarray) -> str:
    scores = model.scores(model.prepare(vector))
    # classes are sorted, so argmax's first-max rule breaks ties lexicographically
    return model.classes[int(np.argmax(scores))]


# --- evaluation --------------------------------------------------------------

@dataclass
class EvalReport:
    labels: list[str]
    confusion: np.ndarray
    seed: int | None = None
    config: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        total = int(self.confusion.sum())
        return float(np.trace(self.confusion)) / total if total else 0.0

    def per_class(self) -> dict[str, dict]:
        out = {}
        for i, label in enumerate(self.labels):
            tp = int(self.confusion[i, i])
            predicted = int(self.confusion[:, i].sum())
            support = int(self.confusion[i].sum())
            out[label] = {
                "precision": tp / predicted if predicted else 0.0,
                "recall": tp / support if support else 0.0,
                "support": support,
            }
        return out

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": self.per_class(),
            "confusion": {"labels": list(self.labels), "matrix": self.confusion.tolist()},
            "seed": self.seed,
            "config": self.config,
        }


def model_labels(model: TrainedModel) -> list[str]:
    return list(model.labels) if isinstance(model, KnnModel) else list(model.classes)


def predict_table(model: TrainedModel, table: FeatureTable) -> list[str]:
    return [model.predict(row) for row in table.values]


def evaluate(model: TrainedModel, test: FeatureTable) -> EvalReport:
    if len(test) == 0:
        raise ParameterError("test set is empty")
    require_same_config(test.config, model.config, "test features")
    predictions = predict_table(model, test)
    labels = sorted(set(model_labels(model)) | set(test.labels))
    index = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for truth, pred in zip(test.labels, predictions):
        confusion[index[truth], index[pred]] += 1
    seed = _seed_of(test)
    if seed is None:
        seed = model.split_seed
    return EvalReport(labels, confusion, seed, model_echo(model))


def model_echo(model: TrainedModel) -> dict:
    echo = {"extraction": model.config.to_dict(), "classifier": model.kind, "block": model.block}
    if isinstance(model, KnnModel):
        echo.update(k=model.k, metric=model.metric)
    return echo


# --- persistence -------------------------------------------------------------

def model_to_dict(model: TrainedModel) -> dict:
    if isinstance(model, KnnModel):
        payload = {
            "k": model.k,
            "metric": model.metric,
            "labels": list(model.labels),
            "vectors": model.vectors.tolist(),
        }
    else:
        payload = {
            "variance_floor": model.variance_floor,
            "classes": list(model.classes),
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
        }
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "config": model.config.to_dict(),
        "block": model.block,
        "split_seed": model.split_seed,
        "train_meta": dict(model.train_meta),
        "standardization": {
            "mean": model.standardization.mean.tolist(),
            "dev": model.standardization.dev.tolist(),
        },
        "payload": payload,
    }


def model_from_dict(d: dict) -> TrainedModel:
    try:
        if d["format_version"] != MODEL_FORMAT_VERSION:
            raise ModelFormatError(f"model format {d['format_version']} unsupported")
        cfg = ExtractionConfig.from_dict(d["config"])
        std = Standardization(
            np.array(d["standardization"]["mean"], dtype=np.float64),
            np.array(d["standardization"]["dev"], dtype=np.float64),
        )
        p = d["payload"]
        common = dict(config=cfg, standardization=std, block=d["block"], split_seed=d.get("split_seed"),
                      train_meta=dict(d.get("train_meta", {})))
        if d["kind"] == "knn":
            return KnnModel(
                vectors=np.array(p["vectors"], dtype=np.float64),
                labels=list(p["labels"]),
                k=int(p["k"]),
                metric=p["metric"],
                **common,
            )
        if d["kind"] == "naive_bayes":
            return NaiveBayesModel(
                classes=list(p["classes"]),
                priors=np.array(p["priors"], dtype=np.float64),
                means=np.array(p["means"], dtype=np.float64),
                variances=np.array(p["variances"], dtype=np.float64),
                variance_floor=float(p["variance_floor"]),
                **common,
            )
        raise ModelFormatError(f"unknown model kind {d['kind']!r}")
    except (KeyError, TypeError, ValueError, ParameterError) as exc:
        raise ModelFormatError(f"malformed model file: {exc!r}") from exc


def save_model(model: TrainedModel, path: os.PathLike | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path: os.PathLike | str) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(data)


def save_report(report: EvalReport | dict, path: os.PathLike | str) -> None:
    data = report.to_dict() if isinstance(report, EvalReport) else report
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def accuracy_of(predictions: Sequence[str], truth: Sequence[str]) -> float:
    return sum(p == t for p, t in zip(predictions, truth)) / len(truth)
