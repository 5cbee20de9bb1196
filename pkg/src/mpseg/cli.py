"""The mpseg command line: validate, stats, rasterize, split, eval, run,
augment, synth, and taxonomy subcommands.

Exit codes: 0 ok, 1 internal/IO error, 2 validation or usage error,
3 partial failure.  Commands that accept ``--json`` print a CliReport
object (command, status, payload, warnings) on stdout; ``eval --json``
instead takes a path and writes the full evaluation report there.  The
MPSEG_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .augment import AugmentRanges, augment_dataset
from .dataset import (
    build_label_mask,
    class_histogram,
    kfold_split,
    load_pixels,
    parse_annotations,
    read_mask_png,
    vessel_ratio,
    write_mask_png,
)
from .errors import IoFailure, LengthMismatch, MpsegError
from .metrics import dataset_mean_f1
from .pipeline import load_pipeline_config, run_dataset
from .synth import SynthConfig, generate, write_synth_dataset
from .taxonomy import taxonomy_table

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3

_STATUS_CODES = {
    "ok": EXIT_OK,
    "internal_error": EXIT_INTERNAL,
    "io_error": EXIT_INTERNAL,
    "validation_error": EXIT_VALIDATION,
    "partial": EXIT_PARTIAL,
}


def _cmd_taxonomy(args):
    rows = taxonomy_table()
    payload = {
        "classes": rows,
        "rca_count": sum(1 for r in rows if r["group"] == "RCA"),
        "lca_count": sum(1 for r in rows if r["group"] == "LCA"),
    }
    lines = [f"{r['id']:>2}  {r['name']:<4} {r['group']}" for r in rows]
    lines.append(f"total {len(rows)} classes: {payload['rca_count']} RCA, {payload['lca_count']} LCA")
    return "ok", payload, lines


def _cmd_validate(args):
    index = parse_annotations(args.file)
    payload = {
        "file": str(args.file),
        "images": len(index.images),
        "annotations": len(index.annotations),
    }
    return "ok", payload, [f"valid: {payload['images']} images, {payload['annotations']} annotations"]


def _cmd_stats(args):
    index = parse_annotations(args.file)
    hist = class_histogram(index)
    rca_images, lca_images = vessel_ratio(index)
    payload = {
        "images": len(index.images),
        "annotations": len(index.annotations),
        "class_histogram": {c.name: n for c, n in hist.items()},
        "rca_images": rca_images,
        "lca_images": lca_images,
    }
    lines = [f"{c.name:<4} {n}" for c, n in hist.items() if n]
    lines.append(f"images: {payload['images']}  annotations: {payload['annotations']}")
    lines.append(f"vessel ratio RCA:LCA = {rca_images}:{lca_images}")
    return "ok", payload, lines


def _cmd_rasterize(args):
    index = parse_annotations(args.file)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for image_id in index.image_ids():
        mask = build_label_mask(index, image_id)
        path = out / f"{image_id}.png"
        write_mask_png(mask, path)
        written.append(str(path))
    payload = {"out": str(out), "masks": len(written)}
    return "ok", payload, [f"wrote {len(written)} label masks to {out}"]


def _cmd_split(args):
    index = parse_annotations(args.file)
    folds = kfold_split(index, args.folds, args.seed)
    payload = {
        "folds": [
            {"fold": i, "train": train, "val": val}
            for i, (train, val) in enumerate(folds)
        ],
        "seed": args.seed,
    }
    lines = [
        f"fold {i}: {len(train)} train / {len(val)} val"
        for i, (train, val) in enumerate(folds)
    ]
    return "ok", payload, lines


def _load_mask_side(path_str):
    """A gt/pred side: a COCO document or a directory of <id>.png masks."""
    path = Path(path_str)
    if path.is_dir():
        masks = {}
        for entry in sorted(path.glob("*.png")):
            try:
                image_id = int(entry.stem)
            except ValueError:
                warnings.warn(f"ignoring non-numeric mask file name {entry.name}")
                continue
            masks[image_id] = read_mask_png(entry)
        if not masks:
            raise LengthMismatch(f"no <image_id>.png masks found in {path}")
        return masks
    index = parse_annotations(path)
    return {i: build_label_mask(index, i) for i in index.image_ids()}


def _cmd_eval(args):
    gt = _load_mask_side(args.gt)
    pred = _load_mask_side(args.pred)
    missing = sorted(set(gt) - set(pred))
    if missing:
        raise LengthMismatch(f"predictions missing for image ids {missing[:10]}")
    extra = sorted(set(pred) - set(gt))
    if extra:
        warnings.warn(f"{len(extra)} prediction(s) without ground truth ignored")
    ids = sorted(gt)
    report = dataset_mean_f1([gt[i] for i in ids], [pred[i] for i in ids], ids)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    payload = report.to_dict()
    if not args.per_class:
        payload = {k: v for k, v in payload.items() if k != "per_image"}
    lines = [f"dataset mean F1: {report.dataset_mean_f1:.6f}"]
    lines.append(
        f"scored {len(report.per_image)} images, skipped {report.skipped_images}"
    )
    if args.per_class:
        for c, v in sorted(report.per_class_aggregate.items(), key=lambda kv: kv[0].id):
            lines.append(f"  {c.name:<4} {v:.6f}")
    if args.json:
        lines.append(f"report written to {args.json}")
    return "ok", payload, lines


def _cmd_run(args):
    cfg = load_pipeline_config(args.config)
    if args.fusion:
        cfg = dataclasses.replace(cfg, fusion_mode=args.fusion)
    index = parse_annotations(args.dataset)
    if args.images:
        index = load_pixels(index, args.images)
    summary = run_dataset(
        index, cfg, args.out, workers=args.workers, evaluate=args.eval
    )
    payload = {
        "out": summary.out_dir,
        "images": summary.n_images,
        "failed": summary.n_failed,
        "failures": summary.failures,
    }
    lines = [f"processed {summary.n_images} images -> {summary.out_dir}"]
    if summary.report is not None:
        payload["dataset_mean_f1"] = summary.report.dataset_mean_f1
        lines.append(f"dataset mean F1: {summary.report.dataset_mean_f1:.6f}")
    if summary.n_failed:
        lines.append(f"{summary.n_failed} image(s) failed; see manifest.json")
        return "partial", payload, lines
    return "ok", payload, lines


def _cmd_augment(args):
    index = parse_annotations(args.dataset)
    index = load_pixels(index, args.images)
    manifest = augment_dataset(
        index, args.out, args.n_per_image, args.seed, AugmentRanges()
    )
    payload = {"out": str(args.out), "outputs": len(manifest["outputs"])}
    return "ok", payload, [f"wrote {payload['outputs']} augmented pairs to {args.out}"]


def _cmd_synth(args):
    cfg = SynthConfig(n_images=args.n, seed=args.seed, canvas=args.canvas)
    index, manifest = generate(cfg)
    paths = write_synth_dataset(index, manifest, args.out)
    payload = {"manifest": manifest, "paths": paths}
    lines = [
        f"generated {manifest['n_images']} images "
        f"({manifest['rca_images']} RCA / {manifest['lca_images']} LCA)",
        f"annotations: {paths['annotations']}",
    ]
    return "ok", payload, lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpseg",
        description="Multi-phase coronary segmentation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"mpseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("taxonomy", help="list the 25 segment classes and groups")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_taxonomy)

    p = sub.add_parser("validate", help="parse and validate an annotation file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("stats", help="class histogram and vessel ratio")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("rasterize", help="write per-image label-mask PNGs")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_rasterize)

    p = sub.add_parser("split", help="deterministic k-fold split")
    p.add_argument("file")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("eval", help="mean-F1 evaluation of predictions vs ground truth")
    p.add_argument("--gt", required=True, help="COCO file or directory of <id>.png masks")
    p.add_argument("--pred", required=True, help="COCO file or directory of <id>.png masks")
    p.add_argument("--per-class", action="store_true", dest="per_class")
    p.add_argument("--json", metavar="OUT_JSON", help="write the full report to this path")
    p.set_defaults(handler=_cmd_eval, json_is_path=True)

    p = sub.add_parser("run", help="run the segmentation pipeline over a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--images", help="directory with the image PNGs")
    p.add_argument("--out", required=True)
    p.add_argument("--eval", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--fusion", choices=["mean", "vote"],
                   help="override the config's fusion_mode")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("augment", help="write augmented image/mask pairs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-image", type=int, required=True, dest="n_per_image")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_augment)

    p = sub.add_parser("synth", help="generate a synthetic vessel-tree dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--canvas", type=int, default=512)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_synth)

    return parser


def _configure_logging():
    level = os.environ.get("MPSEG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    caught: list[warnings.WarningMessage] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            status, payload, lines = args.handler(args)
    except IoFailure as exc:
        status, payload, lines = "io_error", {"error": str(exc)}, [f"error: {exc}"]
    except MpsegError as exc:
        status, payload, lines = "validation_error", {"error": str(exc)}, [f"error: {exc}"]
    except OSError as exc:
        status, payload, lines = "io_error", {"error": str(exc)}, [f"error: {exc}"]

    warning_texts = [str(w.message) for w in caught]
    json_mode = getattr(args, "json", False) and not getattr(args, "json_is_path", False)
    if json_mode:
        report = {
            "command": args.command,
            "status": status,
            "payload": payload,
            "warnings": warning_texts,
        }
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for w in warning_texts:
            print(f"warning: {w}", file=sys.stderr)
        stream = sys.stderr if status in ("validation_error", "io_error") else sys.stdout
        for line in lines:
            print(line, file=stream)
    return _STATUS_CODES[status]


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
