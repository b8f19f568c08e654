"""Command-line front end: synth | train | predict | evaluate | sweep.

Every command is a deterministic function of its flags, input files, and
seed. Failures exit nonzero with a message naming the pipeline stage that
broke.
"""

from __future__ import annotations

import argparse
import os
import sys
import zlib
from contextlib import contextmanager

import numpy as np
from PIL import Image

from . import broadnet, evaluation, imagery, resample
from .errors import ChangeDetectionError, GeometryError
from .linalg import SparseAutoencoderConfig


class _StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"error in {stage} stage: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except (ChangeDetectionError, OSError, ValueError) as exc:
        raise _StageFailure(name, exc) from exc


def _derive_seed(base: int, tag: str) -> int:
    """Stable per-cell seed: adding grid points never reshuffles old cells."""
    return (base + zlib.crc32(tag.encode("utf-8"))) % (2**31)


# ---------------------------------------------------------------------------
# synthetic scene generation


def generate_scene(
    width: int,
    height: int,
    rect: tuple[int, int, int, int],
    noise_sigma: float,
    delta: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded noise background pair with one shifted rectangle.

    Returns (reference, test, mask) where test is the reference plus `delta`
    on every channel inside the rectangle and fresh noise everywhere, and
    mask is 0/255. Raises GeometryError when the rectangle does not fit.
    """
    x, y, w, h = rect
    if w < 1 or h < 1:
        raise GeometryError(f"rectangle {w}x{h} must be at least 1x1")
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise GeometryError(
            f"rectangle {w}x{h} at ({x}, {y}) does not fit in {width}x{height}"
        )
    rng = np.random.default_rng(seed)
    base = 128.0 + noise_sigma * rng.standard_normal((height, width, 3))
    mask = np.zeros((height, width), dtype=np.uint8)
    mask[y : y + h, x : x + w] = 1
    shifted = base + delta * mask[:, :, None]
    shifted = shifted + noise_sigma * rng.standard_normal((height, width, 3))
    reference = np.clip(np.rint(base), 0, 255).astype(np.uint8)
    test = np.clip(np.rint(shifted), 0, 255).astype(np.uint8)
    return reference, test, mask * 255


def _write_png(array: np.ndarray, path) -> None:
    Image.fromarray(array).save(path, format="PNG")


# ---------------------------------------------------------------------------
# shared pipeline pieces


def _load_labeled_scene(ref_path, test_path, mask_path):
    with _stage("imagery"):
        pair = imagery.load_image_pair(ref_path, test_path)
        diff = imagery.difference_magnitude(pair)
        grid = imagery.binarize_mask(mask_path)
        data = imagery.extract_patterns(diff, grid)
    return pair, diff, grid, data


def _broadnet_config(args, seed: int) -> broadnet.BroadNetConfig:
    return broadnet.BroadNetConfig(
        max_layers=args.layers,
        compression=args.compression,
        first_layer_width=args.first_layer_width,
        afs_epsilon=args.afs_epsilon,
        cv_folds=args.cv_folds,
        ridge_lambda=args.ridge_lambda,
        autoencoder=SparseAutoencoderConfig(seed=seed),
        seed=seed,
    )


def _train_one(train_set, args, ir, strategy, config, seed):
    with _stage("resample"):
        minority_target = args.minority_target
        if minority_target is None:
            minority_target = max(2, train_set.class_count(1))
        balanced = resample.rebalance(train_set, ir, strategy, minority_target, seed)
    with _stage("fit"):
        return broadnet.fit(config, balanced)


def _append_csv_row(path, header: str, row: str) -> None:
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if need_header:
            fh.write(header + "\n")
        fh.write(row + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    with _stage("synth"):
        reference, test, mask = generate_scene(
            args.width, args.height, args.rect, args.noise_sigma, args.delta, args.seed
        )
    with _stage("io"):
        os.makedirs(args.out_dir, exist_ok=True)
        _write_png(reference, os.path.join(args.out_dir, "ref.png"))
        _write_png(test, os.path.join(args.out_dir, "test.png"))
        _write_png(mask, os.path.join(args.out_dir, "mask.png"))
    print(f"wrote ref.png, test.png, mask.png to {args.out_dir}")
    return 0


def cmd_train(args) -> int:
    _, _, _, data = _load_labeled_scene(args.ref, args.test, args.mask)
    with _stage("split"):
        train_set, _ = imagery.split_dataset(data, args.train_fraction, args.seed)
    strategy = resample.ResampleStrategy(method=args.strategy, smote_k=args.smote_k)
    config = _broadnet_config(args, args.seed)
    model = _train_one(train_set, args, args.ir, strategy, config, args.seed)
    with _stage("io"):
        broadnet.save_model(model, args.out)
    for i, afs in enumerate(model.trace, start=1):
        print(f"layer {i}: cv afs {afs:.2f}")
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    with _stage("model"):
        model = broadnet.load_model(args.model)
    with _stage("imagery"):
        pair = imagery.load_image_pair(args.ref, args.test)
        diff = imagery.difference_magnitude(pair)
        patterns = imagery.patterns_from_difference(diff)
    with _stage("predict"):
        prediction = broadnet.predict(model, patterns)
        change_map = evaluation.render_change_map(prediction, pair.width, pair.height)
    with _stage("io"):
        _write_png(change_map, args.out)
    print(f"change map written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    if args.pred is not None:
        with _stage("imagery"):
            truth = imagery.binarize_mask(args.mask)
            predicted = imagery.binarize_mask(args.pred)
        truth_labels = truth.labels.reshape(-1)
        predicted_labels = predicted.labels.reshape(-1)
    else:
        if args.model is None:
            raise _StageFailure(
                "evaluate", ValueError("need either --pred or --model with --ref/--test")
            )
        with _stage("model"):
            model = broadnet.load_model(args.model)
        _, _, grid, data = _load_labeled_scene(args.ref, args.test, args.mask)
        if args.holdout:
            with _stage("split"):
                _, test_set = imagery.split_dataset(data, args.train_fraction, args.seed)
            data = test_set
        with _stage("predict"):
            prediction = broadnet.predict(model, data.patterns)
        truth_labels = data.labels
        predicted_labels = prediction.labels

    with _stage("evaluate"):
        report = evaluation.evaluate_labels(
            truth_labels,
            predicted_labels,
            strategy=args.strategy or "",
            ir=args.ir or "",
            layers=args.layers or 0,
            compression=args.compression or 0.0,
        )
    print(f"f0: {report.f0:.2f}")
    print(f"f1: {report.f1:.2f}")
    print(f"afs: {report.afs:.2f}")
    if args.csv:
        with _stage("io"):
            _append_csv_row(
                args.csv, evaluation.CSV_HEADER, evaluation.format_report_row(report)
            )
    return 0


def cmd_sweep(args) -> int:
    _, _, _, data = _load_labeled_scene(args.ref, args.test, args.mask)
    with _stage("split"):
        train_set, test_set = imagery.split_dataset(data, args.train_fraction, args.seed)

    rows: list[str] = []
    for ir in args.ir:
        for method in args.strategy:
            for layers in args.layers:
                for compression in args.compression:
                    tag = f"{method}|{ir}|{layers}|{compression:g}"
                    cell_seed = _derive_seed(args.seed, tag)
                    cell = argparse.Namespace(**vars(args))
                    cell.layers = layers
                    cell.compression = compression
                    strategy = resample.ResampleStrategy(
                        method=method, smote_k=args.smote_k
                    )
                    config = _broadnet_config(cell, cell_seed)
                    try:
                        model = _train_one(
                            train_set, cell, ir, strategy, config, cell_seed
                        )
                        prediction = broadnet.predict(model, test_set.patterns)
                        report = evaluation.evaluate_labels(
                            test_set.labels,
                            prediction.labels,
                            strategy=method,
                            ir=str(ir),
                            layers=layers,
                            compression=compression,
                        )
                        row = evaluation.format_report_row(report) + ","
                    except _StageFailure as failure:
                        message = str(failure.cause).replace(",", ";")
                        row = f"{method},{ir},{layers},{compression:.2f},,,,{message}"
                    rows.append(row)
                    print(row)

    with _stage("io"):
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(evaluation.CSV_HEADER + ",error\n")
            for row in rows:
                fh.write(row + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _rect(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rect must be X,Y,W,H")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _comma_list(convert):
    def parse(text: str) -> list:
        return [convert(part) for part in text.split(",")]

    return parse


def _strategy_name(text: str) -> str:
    if text not in (resample.STRATEGY_RANDOM_OVER, resample.STRATEGY_SMOTE):
        raise argparse.ArgumentTypeError(f"unknown strategy {text!r}")
    return text


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="optional key=value config file; flags win")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")


def _add_model_knobs(parser: argparse.ArgumentParser, as_lists: bool) -> None:
    if as_lists:
        parser.add_argument(
            "--layers", type=_comma_list(int), default=[3, 5],
            help="comma-separated layer caps, e.g. 3,5",
        )
        parser.add_argument(
            "--compression", type=_comma_list(float), default=[0.9, 0.7],
            help="comma-separated compression rates, e.g. 0.9,0.7",
        )
    else:
        parser.add_argument(
            "--layers", type=int, default=5, help="maximum enhancement layers"
        )
        parser.add_argument(
            "--compression", type=float, default=0.9,
            help="new-layer width as a fraction of the previous layer",
        )
    parser.add_argument(
        "--first-layer-width", type=int, default=8,
        help="node count of the first enhancement layer",
    )
    parser.add_argument(
        "--afs-epsilon", type=float, default=0.5,
        help="stop growing when the cv AFS gain drops below this",
    )
    parser.add_argument("--cv-folds", type=int, default=3, help="stratified cv folds")
    parser.add_argument(
        "--ridge-lambda", type=float, default=1e-6,
        help="ridge term of the pseudo-inverse output solve",
    )


def _add_resample_knobs(parser: argparse.ArgumentParser, as_lists: bool) -> None:
    if as_lists:
        parser.add_argument(
            "--ir", type=_comma_list(resample.ImbalanceRatio.parse),
            default=[resample.ImbalanceRatio.parse(t)
                     for t in ("1:1", "2:1", "10:1", "50:1", "100:1", "250:1")],
            help="comma-separated majority:minority ratios",
        )
        parser.add_argument(
            "--strategy", type=_comma_list(_strategy_name),
            default=[resample.STRATEGY_RANDOM_OVER, resample.STRATEGY_SMOTE],
            help="comma-separated strategies out of randover,smote",
        )
    else:
        parser.add_argument(
            "--ir", type=resample.ImbalanceRatio.parse, default="10:1",
            help="majority:minority ratio, e.g. 10:1",
        )
        parser.add_argument(
            "--strategy", choices=[resample.STRATEGY_RANDOM_OVER, resample.STRATEGY_SMOTE],
            default=resample.STRATEGY_SMOTE, help="minority over-sampling strategy",
        )
    parser.add_argument(
        "--minority-target", type=int, default=None,
        help="post-resampling minority size (default: its natural count)",
    )
    parser.add_argument("--smote-k", type=int, default=5, help="SMOTE neighbor count")
    parser.add_argument(
        "--train-fraction", type=float, default=0.7,
        help="per-class fraction of samples used for training",
    )


def _build_parser() -> tuple[argparse.ArgumentParser, argparse._SubParsersAction]:
    parser = argparse.ArgumentParser(
        prog="broadchange",
        description="Change detection in co-registered aerial image pairs "
        "with a broad-learning classifier.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="generate a synthetic scene")
    synth.add_argument("--width", type=int, default=64)
    synth.add_argument("--height", type=int, default=64)
    synth.add_argument("--rect", type=_rect, default=(24, 24, 16, 16),
                       help="changed rectangle as X,Y,W,H")
    synth.add_argument("--noise-sigma", type=float, default=6.0,
                       help="per-channel Gaussian noise level")
    synth.add_argument("--delta", type=float, default=60.0,
                       help="intensity shift inside the rectangle")
    synth.add_argument("--out-dir", default=".", help="directory for the three PNGs")
    _add_common(synth)
    synth.set_defaults(func=cmd_synth)

    train = subparsers.add_parser("train", help="train a model on one scene")
    train.add_argument("--ref", required=True, help="reference image PNG")
    train.add_argument("--test", required=True, help="test image PNG")
    train.add_argument("--mask", required=True, help="ground-truth mask PNG")
    train.add_argument("--out", required=True, help="output model JSON path")
    _add_resample_knobs(train, as_lists=False)
    _add_model_knobs(train, as_lists=False)
    _add_common(train)
    train.set_defaults(func=cmd_train)

    predict = subparsers.add_parser("predict", help="render a change map")
    predict.add_argument("--model", required=True, help="model JSON path")
    predict.add_argument("--ref", required=True)
    predict.add_argument("--test", required=True)
    predict.add_argument("--out", required=True, help="output change-map PNG")
    _add_common(predict)
    predict.set_defaults(func=cmd_predict)

    evaluate = subparsers.add_parser("evaluate", help="score predictions against a mask")
    evaluate.add_argument("--mask", required=True, help="ground-truth mask PNG")
    evaluate.add_argument("--pred", help="predicted change-map PNG to score")
    evaluate.add_argument("--model", help="model JSON (used when --pred is absent)")
    evaluate.add_argument("--ref", help="reference image PNG (model mode)")
    evaluate.add_argument("--test", help="test image PNG (model mode)")
    evaluate.add_argument("--holdout", action="store_true",
                          help="score only the held-out test split")
    evaluate.add_argument("--train-fraction", type=float, default=0.7)
    evaluate.add_argument("--csv", help="append the result row to this CSV")
    evaluate.add_argument("--strategy", default="", help="metadata tag for the CSV row")
    evaluate.add_argument("--ir", default="", help="metadata tag for the CSV row")
    evaluate.add_argument("--layers", type=int, default=0,
                          help="metadata tag for the CSV row")
    evaluate.add_argument("--compression", type=float, default=0.0,
                          help="metadata tag for the CSV row")
    _add_common(evaluate)
    evaluate.set_defaults(func=cmd_evaluate)

    sweep = subparsers.add_parser(
        "sweep", help="train and score every ratio/strategy/layers/compression cell"
    )
    sweep.add_argument("--ref", required=True)
    sweep.add_argument("--test", required=True)
    sweep.add_argument("--mask", required=True)
    sweep.add_argument("--csv", required=True, help="output CSV path")
    _add_resample_knobs(sweep, as_lists=True)
    _add_model_knobs(sweep, as_lists=True)
    _add_common(sweep)
    sweep.set_defaults(func=cmd_sweep)

    return parser, subparsers


def _parse_config_value(action: argparse.Action, raw: str):
    if action.nargs == 0:  # store_true style flags
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"boolean flag {action.dest} got {raw!r}")
    if action.type is not None:
        return action.type(raw)
    return raw


def _reparse_with_config(parser, subparser, config_path: str, argv) -> argparse.Namespace:
    """Load key=value defaults from a file; explicit flags still win."""
    actions = {}
    for action in subparser._actions:
        if action.dest not in ("help", "config"):
            actions[action.dest] = action
    overrides = {}
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"line {line_no}: expected key=value")
                key, _, raw = line.partition("=")
                dest = key.strip().replace("-", "_")
                if dest not in actions:
                    raise ValueError(f"line {line_no}: unknown key {key.strip()!r}")
                overrides[dest] = _parse_config_value(actions[dest], raw.strip())
    except (OSError, ValueError, argparse.ArgumentTypeError) as exc:
        raise _StageFailure("config", exc) from exc
    subparser.set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, subparsers = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _reparse_with_config(
                parser, subparsers.choices[args.command], args.config, argv
            )
        return args.func(args)
    except _StageFailure as failure:
        print(str(failure), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
