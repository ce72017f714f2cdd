"""Command-line front end: ``texfeat <subcommand> ...``.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
Progress and the resolved configuration go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from . import classify, features, fixtures, imageio
from .errors import TexfeatError
from .features import BLOCKS, ExtractionConfig

log = logging.getLogger("texfeat")

ABLATION_BLOCKS = ("lbp", "ltp", "glcm", "all")


class InputError(Exception):
    """Bad path or flag combination detected by the CLI itself."""


def _add_extraction_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--patch-size", type=int, default=None,
                   help="tile size in pixels (default 128 for directories, whole image for a single file)")
    p.add_argument("--ltp-t", type=int, default=features.DEFAULT_LTP_T)
    p.add_argument("--glcm-levels", type=int, default=256)
    p.add_argument("--glcm-distance", type=int, default=1)
    p.add_argument("--raw-histograms", action="store_true", help="keep raw histogram counts")
    p.add_argument("--variance-mode", choices=("paper", "standard"), default="paper")
    p.add_argument("--jobs", type=int, default=1, help="extraction threads")


def _extraction_config(args) -> ExtractionConfig:
    return ExtractionConfig(
        ltp_t=args.ltp_t,
        glcm_levels=args.glcm_levels,
        glcm_distance=args.glcm_distance,
        histogram_normalize=not args.raw_histograms,
        variance_mode=args.variance_mode,
    )


def _existing(path: str, what: str = "input") -> Path:
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} path does not exist: {path}")
    return p


def _echo_config(command: str, resolved: dict) -> None:
    print(f"texfeat {command}: " + json.dumps(resolved, sort_keys=True), file=sys.stderr)


def _collect_patches(args, input_path: Path) -> tuple[list[imageio.LabeledPatch], int | None]:
    if input_path.is_dir():
        size = args.patch_size or imageio.DEFAULT_PATCH_SIZE
        return imageio.ingest_dataset(input_path, size), size
    if not getattr(args, "label", None):
        raise InputError(f"--label is required when --input is a single file ({input_path})")
    image = imageio.load_gray(input_path)
    if args.patch_size is None:
        return [imageio.LabeledPatch(image, args.label, imageio.PatchSource(input_path.name))], None
    return imageio.tile(image, args.patch_size, args.label, input_path.name), args.patch_size


def cmd_extract(args) -> int:
    input_path = _existing(args.input)
    cfg = _extraction_config(args)
    _echo_config("extract", {"input": args.input, "out": args.out, "patch_size": args.patch_size,
                             "label": args.label, "jobs": args.jobs, **cfg.to_dict()})
    patches, size = _collect_patches(args, input_path)
    log.info("extracting %d patches", len(patches))
    table = features.extract_table(patches, cfg, jobs=args.jobs)
    table.extra["input"] = args.input
    table.extra["patch_size"] = "whole" if size is None else str(size)
    features.write_csv(table, args.out)
    log.info("wrote %d rows to %s", len(table), args.out)
    return 0


def cmd_split(args) -> int:
    table = features.read_csv(_existing(args.features, "features"))
    _echo_config("split", {"features": args.features, "train_frac": args.train_frac, "seed": args.seed,
                           "out_train": args.out_train, "out_test": args.out_test})
    train, test = classify.stratified_split(table, args.train_frac, args.seed)
    for part in (train, test):
        part.extra["train_frac"] = repr(args.train_frac)
    features.write_csv(train, args.out_train)
    features.write_csv(test, args.out_test)
    log.info("train %d rows, test %d rows", len(train), len(test))
    return 0


def _train(table, args):
    if args.model == "knn":
        return classify.knn_train(table, args.k, args.metric, args.block)
    return classify.nb_train(table, args.block)


def cmd_train(args) -> int:
    table = features.read_csv(_existing(args.features, "features"))
    _echo_config("train", {"features": args.features, "model": args.model, "k": args.k,
                           "metric": args.metric, "block": args.block, "out": args.out})
    model = _train(table, args)
    classify.save_model(model, args.out)
    log.info("saved %s model to %s", model.kind, args.out)
    return 0


def cmd_evaluate(args) -> int:
    model = classify.load_model(_existing(args.model, "model"))
    table = features.read_csv(_existing(args.features, "features"))
    _echo_config("evaluate", {"model": args.model, "features": args.features, "report": args.report})
    report = classify.evaluate(model, table)
    classify.save_report(report, args.report)
    print(f"accuracy {report.accuracy:.4f} ({int(report.confusion.trace())}/{int(report.confusion.sum())})")
    return 0


def cmd_predict(args) -> int:
    model = classify.load_model(_existing(args.model, "model"))
    image = imageio.load_gray(_existing(args.image, "image"))
    size = model.train_meta.get("patch_size", "whole")
    _echo_config("predict", {"model": args.model, "image": args.image, "patch_size": size})
    print(predict_image(model, image, None if size == "whole" else int(size)))
    return 0


def predict_image(model: classify.TrainedModel, image: imageio.GrayImage, patch_size: int | None) -> str:
    """Label an image the way the model's training rows were produced.

    With a patch size, every tile is classified and the most frequent label
    wins (ties go to the smaller label); images smaller than one tile, or
    models trained on whole images, use a single whole-image descriptor.
    """
    patches = imageio.tile(image, patch_size) if patch_size else []
    if not patches:
        return model.predict(features.extract(image, model.config))
    votes = Counter(model.predict(features.extract(p, model.config)) for p in patches)
    return min(votes, key=lambda lab: (-votes[lab], lab))


def run_ablation(
    table: features.FeatureTable,
    blocks=ABLATION_BLOCKS,
    seed: int = 42,
    train_fraction: float = 0.5,
    classifier: str = "knn",
    k: int = 3,
    metric: str = "euclidean",
) -> dict:
    """Train and evaluate one classifier per feature block on a shared split."""
    train, test = classify.stratified_split(table, train_fraction, seed)
    accuracy = {}
    for block in blocks:
        if classifier == "knn":
            model = classify.knn_train(train, k, metric, block)
        else:
            model = classify.nb_train(train, block)
        accuracy[block] = classify.evaluate(model, test).accuracy
    return {
        "seed": seed,
        "train_fraction": train_fraction,
        "classifier": {"kind": classifier, "k": k, "metric": metric} if classifier == "knn" else {"kind": classifier},
        "extraction": table.config.to_dict(),
        "n_train": len(train),
        "n_test": len(test),
        "accuracy": accuracy,
    }


def cmd_ablate(args) -> int:
    input_path = _existing(args.input)
    if not input_path.is_dir():
        raise InputError(f"--input must be a dataset directory: {args.input}")
    blocks = [b.strip() for b in args.blocks.split(",") if b.strip()]
    unknown = [b for b in blocks if b not in BLOCKS]
    if unknown:
        raise InputError(f"unknown block(s) {unknown}; choose from {sorted(BLOCKS)}")
    cfg = _extraction_config(args)
    size = args.patch_size or imageio.DEFAULT_PATCH_SIZE
    _echo_config("ablate", {"input": args.input, "blocks": blocks, "seed": args.seed, "report": args.report,
                            "patch_size": size, "train_frac": args.train_frac, "classifier": args.classifier,
                            "k": args.k, "metric": args.metric, **cfg.to_dict()})
    patches = imageio.ingest_dataset(input_path, size)
    log.info("extracting %d patches", len(patches))
    table = features.extract_table(patches, cfg, jobs=args.jobs)
    result = run_ablation(table, blocks, args.seed, args.train_frac, args.classifier, args.k, args.metric)
    result = {"input": args.input, "patch_size": size, **result}
    if args.report:
        classify.save_report(result, args.report)
    print(f"{'block':<10}accuracy")
    for block, acc in result["accuracy"].items():
        print(f"{block:<10}{100 * acc:6.2f}%")
    return 0


def cmd_fixtures(args) -> int:
    _echo_config("fixtures", {"out": args.out, "size": args.size, "seed": args.seed})
    fixtures.make_fixture_corpus(args.out, args.size, args.seed)
    log.info("wrote %d classes under %s", len(fixtures.CLASS_NAMES), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texfeat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute 808-d descriptors into a feature CSV")
    p.add_argument("--input", required=True, help="dataset directory or single image")
    p.add_argument("--out", required=True)
    p.add_argument("--label", help="class label when --input is a single file")
    _add_extraction_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("split", help="stratified train/test split of a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit a KNN or naive Bayes model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=("knn", "nb"), default="knn")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--metric", choices=classify.METRICS, default="euclidean")
    p.add_argument("--block", choices=sorted(BLOCKS), default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="compare feature blocks on one split")
    p.add_argument("--input", required=True)
    p.add_argument("--blocks", default=",".join(ABLATION_BLOCKS))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--classifier", choices=("knn", "nb"), default="knn")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--metric", choices=classify.METRICS, default="euclidean")
    p.add_argument("--report")
    _add_extraction_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("fixtures", help="write the synthetic 10-class texture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=fixtures.FIXTURE_SIZE)
    p.add_argument("--seed", type=int, default=fixtures.FIXTURE_SEED)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InputError, TexfeatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"texfeat: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"texfeat: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
