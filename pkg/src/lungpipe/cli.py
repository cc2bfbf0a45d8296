"""Command-line entry point: ``lungpipe <command> ...``.

Every command accepts ``--config <json>``; keys in that JSON object replace
the values of the flags with the same name (dashes become underscores). For
``report`` the file is the full pipeline configuration instead.

Exit codes: 0 success, 2 validation error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LungpipeError
from .evaluation import PipelineConfig, emit_chart, evaluate, model_params, run_comparison, fit_named_model, derived_seed, MODEL_ORDER
from .features import FEATURE_COLUMNS, THREE_PREDICTORS, FeatureTable, extract_features, read_feature_csv, write_feature_csv
from .imgio import MAXVAL, GrayImage, image_to_mask, load_image, load_manifest, mask_to_image, save_image
from .learn import load_model, save_model, standardize
from .pipeline import ImagePipeline
from .prep import MedianWindow, equalize_histogram, median_filter
from .segment import EXTERNAL, INTERNAL
from .synthetic import write_phantom_dataset

log = logging.getLogger("lungpipe")


class ValidationError(LungpipeError, ValueError):
    pass


def _predictors(text: str) -> list[str]:
    if text == "all":
        return list(FEATURE_COLUMNS)
    if text == "three":
        return list(THREE_PREDICTORS)
    cols = [c.strip() for c in text.split(",") if c.strip()]
    bad = set(cols) - set(FEATURE_COLUMNS)
    if bad or not cols:
        raise ValidationError(f"unknown predictors {sorted(bad)}; choose from {FEATURE_COLUMNS}")
    return cols


def cmd_synth(args):
    path = write_phantom_dataset(
        args.out_dir, args.n_train, args.n_test, args.seed, args.size, args.positive_rate, args.label_noise
    )
    print(path)


def cmd_preprocess(args):
    img = load_image(args.input)
    out = equalize_histogram(median_filter(img, MedianWindow.parse(args.median)), args.levels)
    save_image(out, args.out)


def _pipeline(args) -> ImagePipeline:
    m = MedianWindow.parse(args.median)
    pl = ImagePipeline()
    pl.preprocess.median = (m.m, m.n)
    if getattr(args, "dilate", None) is not None:
        pl.segment.dilate = args.dilate
    if getattr(args, "bins", None) is not None:
        pl.features.bins = args.bins
    return pl


def cmd_segment(args):
    img = load_image(args.input)
    _, res = _pipeline(args).segment_image(img)
    save_image(mask_to_image(res.mask), args.out_mask)
    if args.emit_gradient:
        g = res.gradient
        scale = MAXVAL / g.max() if g.max() > 0 else 0.0
        save_image(GrayImage(np.floor(g * scale + 0.5)), args.emit_gradient)
    if args.emit_markers:
        m = np.zeros(res.markers.shape, dtype=np.uint16)
        m[res.markers == INTERNAL] = MAXVAL
        m[res.markers == EXTERNAL] = 32768
        save_image(GrayImage(m), args.emit_markers)


def cmd_features(args):
    if args.manifest:
        table = _pipeline(args).run_manifest(load_manifest(args.manifest))
    elif args.input:
        img = load_image(args.input)
        if args.mask:
            mask = image_to_mask(load_image(args.mask))
            rec = extract_features(img, mask, args.id or Path(args.input).name, args.label, args.bins)
        else:
            rec, _ = _pipeline(args).features_for(img, args.id or Path(args.input).name, args.label)
        table = FeatureTable([rec])
    else:
        raise ValidationError("features needs --manifest or --in")
    write_feature_csv(table, args.out)
    print(f"{len(table)} records -> {args.out}")


def cmd_train(args):
    table = read_feature_csv(args.features)
    cols = _predictors(args.predictors)
    name = args.model
    cfg = PipelineConfig(features=args.features, models={name: json.loads(args.params) if args.params else {}})
    design = standardize(table, cols)
    seed = derived_seed(args.seed, MODEL_ORDER.index(name), 0)
    model, used = fit_named_model(name, design, model_params(cfg, name), seed)
    save_model(model, args.out)
    cm, acc = evaluate(model, table)
    print(json.dumps({"model": name, "train_accuracy": acc, "hyperparameters": used}, default=float))


def cmd_evaluate(args):
    model = load_model(args.model)
    table = read_feature_csv(args.features)
    cm, acc = evaluate(model, table)
    doc = {"model": model.kind, "accuracy": acc, "confusion": cm.to_dict(), "n": cm.total}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def cmd_report(args):
    if not args.config:
        raise ValidationError("report needs --config <pipeline config json>")
    cfg = PipelineConfig.load(args.config)
    report = run_comparison(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "report.json")
    emit_chart(report, out / "accuracy")
    for r in report.rows:
        acc = "-" if r.accuracy is None else f"{r.accuracy:.4f}"
        print(f"{r.model:9s} {r.predictor_set:6s} {r.split:5s} {r.status:6s} {acc}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lungpipe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lungpipe {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", help="JSON file whose keys override flag values")
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "render a phantom dataset (PGM files + manifest.csv)")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--n-train", type=int, default=80)
    sp.add_argument("--n-test", type=int, default=20)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--positive-rate", type=float, default=0.5)
    sp.add_argument("--label-noise", type=float, default=0.02)

    sp = add("preprocess", cmd_preprocess, "median filter + histogram equalization")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--median", default="3x3", help="window MxN (odd), default 3x3")
    sp.add_argument("--levels", type=int, default=256)

    sp = add("segment", cmd_segment, "marker-controlled watershed lung mask")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out-mask", required=True)
    sp.add_argument("--emit-gradient")
    sp.add_argument("--emit-markers")
    sp.add_argument("--dilate", type=float, default=10.0)
    sp.add_argument("--median", default="3x3", help="smoothing applied before segmenting; 1x1 disables")

    sp = add("features", cmd_features, "extract the six ROI features to CSV")
    sp.add_argument("--manifest")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--mask", help="use this mask instead of segmenting")
    sp.add_argument("--id")
    sp.add_argument("--label", type=int, choices=(0, 1))
    sp.add_argument("--out", required=True)
    sp.add_argument("--bins", type=int, default=256)
    sp.add_argument("--median", default="3x3")
    sp.add_argument("--dilate", type=float, default=10.0)

    sp = add("train", cmd_train, "fit one model on a feature CSV")
    sp.add_argument("--features", required=True)
    sp.add_argument("--model", required=True, choices=MODEL_ORDER)
    sp.add_argument("--predictors", default="all", help="all, three, or comma-separated columns")
    sp.add_argument("--params", help="JSON object of hyperparameters")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("evaluate", cmd_evaluate, "accuracy and confusion matrix of a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--out")

    sp = add("report", cmd_report, "fit all models, write report.json and the accuracy chart")
    sp.add_argument("--out-dir", required=True)
    return p


def _apply_config(args: argparse.Namespace) -> None:
    if args.command == "report" or not getattr(args, "config", None):
        return
    overrides = json.loads(Path(args.config).read_text())
    if not isinstance(overrides, dict):
        raise ValidationError("--config must hold a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest == "in":
            dest = "input"
        if dest in ("command", "func", "config") or not hasattr(args, dest):
            raise ValidationError(f"config key {key!r} is not a flag of '{args.command}'")
        setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _apply_config(args)
        args.func(args)
    except (ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"lungpipe: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"lungpipe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
