"""The challenge metric: per-class pixel F1 aggregated to a dataset mean.

Scoring rules:

- F1 is computed per class from pixel TP/FP/FN, with precision = TP/(TP+FP)
  and recall = TP/(TP+FN); a vanishing denominator makes the ratio 0, and
  F1 is 0 when precision + recall is 0.
- only classes present in the ground truth of an image are scored; classes
  predicted but absent from the ground truth are disregarded.
- the image mean averages over that image's ground-truth classes; the
  dataset mean averages image means over images that have at least one
  ground-truth class (others are skipped and counted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import LengthMismatch, NoGroundTruthClasses, ShapeMismatch
from .taxonomy import BY_ID, N_CLASSES, SegmentClass

_N_LABELS = N_CLASSES + 1  # 0 = background


def _check_shapes(gt, pred):
    if gt.shape != pred.shape:
        raise ShapeMismatch(f"mask shapes differ: {gt.shape} vs {pred.shape}")


def _f1_from_counts(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def binary_f1(gt: np.ndarray, pred: np.ndarray) -> float:
    """Pixel F1 between two binary masks of equal shape."""
    gt = np.asarray(gt, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    _check_shapes(gt, pred)
    tp = int(np.count_nonzero(gt & pred))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(gt & ~pred))
    return _f1_from_counts(tp, fp, fn)


def binary_iou(gt: np.ndarray, pred: np.ndarray) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    gt = np.asarray(gt, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    _check_shapes(gt, pred)
    union = int(np.count_nonzero(gt | pred))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(gt & pred)) / union


def image_mean_f1(gt: np.ndarray, pred: np.ndarray) -> tuple[dict[SegmentClass, float], float]:
    """Per-class F1 for one image plus the mean over ground-truth classes."""
    gt = np.asarray(gt, dtype=np.uint8)
    pred = np.asarray(pred, dtype=np.uint8)
    _check_shapes(gt, pred)
    cm = kernels.confusion_matrix(gt, pred, _N_LABELS)
    gt_counts = cm.sum(axis=1)
    pred_counts = cm.sum(axis=0)
    per_class: dict[SegmentClass, float] = {}
    for class_id in range(1, _N_LABELS):
        if gt_counts[class_id] == 0:
            continue
        tp = int(cm[class_id, class_id])
        fn = int(gt_counts[class_id]) - tp
        fp = int(pred_counts[class_id]) - tp
        per_class[BY_ID[class_id]] = _f1_from_counts(tp, fp, fn)
    if not per_class:
        raise NoGroundTruthClasses("image has no labeled ground-truth pixels")
    image_mean = sum(per_class.values()) / len(per_class)
    return per_class, image_mean


@dataclass(frozen=True)
class ImageEval:
    image_id: int
    per_class: dict  # SegmentClass -> float
    image_mean: float


@dataclass(frozen=True)
class EvalReport:
    per_image: list  # of ImageEval, scored images only
    dataset_mean_f1: float
    per_class_aggregate: dict  # SegmentClass -> mean F1 over images containing it
    skipped_images: int

    def to_dict(self) -> dict:
        """JSON-ready form with class-name keys in ascending-id order."""
        return {
            "dataset_mean_f1": self.dataset_mean_f1,
            "skipped_images": self.skipped_images,
            "n_scored_images": len(self.per_image),
            "per_class_aggregate": {
                c.name: v
                for c, v in sorted(self.per_class_aggregate.items(), key=lambda kv: kv[0].id)
            },
            "per_image": [
                {
                    "image_id": ev.image_id,
                    "image_mean": ev.image_mean,
                    "per_class": {
                        c.name: v
                        for c, v in sorted(ev.per_class.items(), key=lambda kv: kv[0].id)
                    },
                }
                for ev in self.per_image
            ],
        }


def dataset_mean_f1(gt_masks, pred_masks, image_ids=None) -> EvalReport:
    """Score aligned lists of ground-truth and predicted label masks.

    Images whose ground truth has no labeled pixels are skipped and counted
    in ``skipped_images``; the dataset mean averages the remaining image
    means in ascending image order.
    """
    gt_masks = list(gt_masks)
    pred_masks = list(pred_masks)
    if len(gt_masks) != len(pred_masks):
        raise LengthMismatch(
            f"{len(gt_masks)} ground-truth masks vs {len(pred_masks)} predictions"
        )
    if image_ids is None:
        image_ids = list(range(len(gt_masks)))
    else:
        image_ids = list(image_ids)
        if len(image_ids) != len(gt_masks):
            raise LengthMismatch("image id list does not match the mask lists")

    per_image = []
    skipped = 0
    class_scores: dict[SegmentClass, list[float]] = {}
    for image_id, gt, pred in zip(image_ids, gt_masks, pred_masks):
        try:
            per_class, mean = image_mean_f1(gt, pred)
        except NoGroundTruthClasses:
            skipped += 1
            continue
        per_image.append(ImageEval(image_id, per_class, mean))
        for c, v in per_class.items():
            class_scores.setdefault(c, []).append(v)

    overall = (
        sum(ev.image_mean for ev in per_image) / len(per_image) if per_image else 0.0
    )
    aggregate = {c: sum(v) / len(v) for c, v in class_scores.items()}
    return EvalReport(per_image, overall, aggregate, skipped)
