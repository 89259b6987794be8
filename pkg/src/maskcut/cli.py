"""``facecut-pipeline`` command-line entry point.

Exit codes: 0 success, 1 pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import PipelineConfig, load_config
from .dataset import (
    read_manifest,
    scan_dataset,
    split_dataset,
    validate_ratios,
    write_manifest,
    preprocess_dataset,
)
from .errors import MaskcutError, ParseError, RatioError
from .facecut import parse_fill

log = logging.getLogger("maskcut")

BACKBONE_FLAGS = {"toy": "toy", "large": "large_pretrained"}
LOSS_FLAGS = {"xent": "cross_entropy", "kl": "kl_divergence"}


def _ratios(text: str) -> tuple[float, float, float]:
    try:
        return validate_ratios(float(v) for v in text.split(","))
    except (ValueError, RatioError) as exc:
        raise argparse.ArgumentTypeError(f"expected three ratios 'train,val,test' summing to 1: {exc}")


def _fill(text: str) -> tuple[int, int, int]:
    try:
        return parse_fill(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("alpha must be in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="facecut-pipeline",
        description="Face-mask recognition with landmark-polygon face cut preprocessing.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("scan", parents=[common], help="index a class-per-directory dataset")
    p.add_argument("--data-root", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="manifest CSV to write")

    p = sub.add_parser("cut", parents=[common], help="face-cut every image of a dataset")
    p.add_argument("--input-dir", type=Path, required=True, help="dataset root with class directories")
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--manifest", type=Path, help="use this manifest instead of scanning --input-dir")
    p.add_argument("--landmarks", choices=("predictor", "sidecar"))
    p.add_argument("--predictor-path", type=Path)
    p.add_argument("--no-face", choices=("skip", "passthrough", "error"))
    p.add_argument("--faces", choices=("largest", "all"))
    p.add_argument("--include-point-zero", action="store_true", default=None)
    p.add_argument("--fill", type=_fill, help="R,G,B outside the face (default 0,0,0)")
    p.add_argument("--debug-overlay", action="store_true", help="also write boundary-marker overlays")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("split", parents=[common], help="stratified train/val/test split")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, help="defaults to overwriting --manifest")
    p.add_argument("--seed", type=int)
    p.add_argument("--ratios", type=_ratios)
    p.add_argument("--include-no-face", action="store_true", default=None)

    p = sub.add_parser("train", parents=[common], help="train the classifier")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--backbone", choices=sorted(BACKBONE_FLAGS))
    p.add_argument("--epochs", type=int)
    p.add_argument("--loss", choices=sorted(LOSS_FLAGS))
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--weights", type=Path, help="local ResNet-50 ImageNet state dict")
    p.add_argument("--out", type=Path, required=True, help="model directory")

    p = sub.add_parser("eval", parents=[common], help="score a model on a split")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True, help="report JSON to write")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))

    p = sub.add_parser("gradcam", parents=[common], help="Grad-CAM overlay for one image")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--class", dest="target", help="class name (default: predicted class)")
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--cut", action="store_true", help="face-cut the image first")
    p.add_argument("--landmarks", choices=("predictor", "sidecar"))
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", parents=[common], help="training curves and summary table")
    p.add_argument("--history", type=Path, help="history.csv from a model directory")
    p.add_argument("--report", type=Path, help="report JSON from eval")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic sidecar-annotated dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _overrides(obj, **values):
    return replace(obj, **{k: v for k, v in values.items() if v is not None})


def _provider(config: PipelineConfig, kind=None, predictor_path=None):
    from .landmarks import make_provider

    return make_provider(
        kind or config.landmarks.provider, predictor_path or config.landmarks.predictor_path
    )


def cmd_scan(args, config):
    manifest = scan_dataset(args.data_root)
    write_manifest(manifest, args.out)
    log.info("scanned %d images: %s", len(manifest.records), manifest.class_counts)


def cmd_cut(args, config):
    options = _overrides(
        config.facecut,
        no_face=args.no_face,
        faces=args.faces,
        include_point_zero=args.include_point_zero,
        fill=args.fill,
    )
    provider = _provider(config, args.landmarks, args.predictor_path)
    if args.manifest:
        manifest = read_manifest(args.manifest)
        manifest.root = str(args.input_dir)
    else:
        manifest = scan_dataset(args.input_dir)
    debug_dir = args.output_dir / "_debug" if args.debug_overlay else None
    derived = preprocess_dataset(
        manifest,
        args.output_dir,
        provider,
        options,
        workers=args.workers or config.dataset.workers,
        debug_dir=debug_dir,
    )
    write_manifest(derived, args.output_dir / "manifest.csv")
    log.info("wrote %s", args.output_dir / "manifest.csv")


def cmd_split(args, config):
    ds = _overrides(config.dataset, seed=args.seed, ratios=args.ratios, include_no_face=args.include_no_face)
    manifest = split_dataset(read_manifest(args.manifest), ds.seed, ds.ratios, ds.include_no_face)
    write_manifest(manifest, args.out or args.manifest)
    log.info("split counts: %s", manifest.split_counts())


def cmd_train(args, config):
    from .classifier import build_model, train

    cc = config.classifier
    backbone = BACKBONE_FLAGS.get(args.backbone, cc.backbone)
    cc = _overrides(
        cc,
        backbone=backbone,
        epochs=args.epochs,
        loss=LOSS_FLAGS.get(args.loss),
        seed=args.seed,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        weights_path=str(args.weights) if args.weights else None,
    )
    if backbone != config.classifier.backbone:
        # switching backbone on the command line takes that backbone's input size
        cc = replace(cc, image_size=None)
    cc = replace(cc, pad_value=config.facecut.fill)
    manifest = read_manifest(args.manifest)
    model = train(build_model(cc), manifest, cc)
    model.save(args.out)
    log.info("saved model to %s", args.out)


def cmd_eval(args, config):
    from .classifier import TrainedModel
    from .metrics import evaluate

    model = TrainedModel.load(args.model)
    _, report = evaluate(model, read_manifest(args.manifest), args.split, args.report)
    log.info("accuracy %.4f acsa %.4f", report.accuracy, report.acsa or float("nan"))


def cmd_gradcam(args, config):
    import numpy as np

    from .classifier import TrainedModel, predict
    from .errors import NoFaceError
    from .explain import compute_cam, heatmap_to_gray, overlay
    from .facecut import cut_face
    from .images import load_image, save_image

    model = TrainedModel.load(args.model)
    image = load_image(args.image)
    if args.cut:
        cuts = cut_face(image, _provider(config, args.landmarks), config.facecut, image_path=args.image)
        if not cuts:
            raise NoFaceError(f"no face found in {args.image}")
        image = cuts[0].pixels
    probs = predict(model, image)
    target = args.target or model.class_names[int(np.argmax(probs))]
    heatmap = compute_cam(model, image, target)
    alpha = config.report.alpha if args.alpha is None else args.alpha
    save_image(args.out, overlay(heatmap, image, alpha))
    gray = args.out.with_name(args.out.stem + "_heatmap.png")
    save_image(gray, heatmap_to_gray(heatmap))
    log.info(
        "%s: predicted %s (%s), heatmap for %s -> %s",
        args.image,
        model.class_names[int(np.argmax(probs))],
        ", ".join(f"{n} {p:.4f}" for n, p in zip(model.class_names, probs)),
        target,
        args.out,
    )


def cmd_report(args, config):
    from .classifier import read_history
    from .metrics import read_report
    from .report import plot_history, write_summary

    if not args.history and not args.report:
        raise ParseError("report needs --history and/or --report")
    if args.history:
        for path in plot_history(read_history(args.history), args.out_dir):
            log.info("wrote %s", path)
    if args.report:
        log.info("wrote %s", write_summary(read_report(args.report), args.out_dir / "summary.txt"))


def cmd_synth(args, config):
    from .synthetic import write_dataset

    write_dataset(args.out, args.n, args.seed)
    log.info("wrote %d synthetic images under %s", args.n, args.out)


COMMANDS = {
    "scan": cmd_scan,
    "cut": cmd_cut,
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcam": cmd_gradcam,
    "report": cmd_report,
    "synth": cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        COMMANDS[args.command](args, config)
    except (MaskcutError, OSError, ValueError) as exc:
        print(f"facecut-pipeline {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
