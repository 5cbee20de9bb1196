"""LCA refinement: re-classify segmented regions and rewrite their labels.

Each region of the predicted mask (one per class, or one per connected
instance of a class) is turned into a binary mask, every refiner is asked
to classify it from the image plus that mask, the probability vectors are
averaged, and the region is relabeled with the argmax class.  Background
pixels never change, so the foreground partition is preserved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import ImageRecord
from .errors import BadConfig, NonLcaClassInMask, NoRefiners
from .taxonomy import LCA_CLASSES

logger = logging.getLogger(__name__)

MODES = ("per_class_mask", "per_connected_component")
CONFLICT_POLICIES = ("merge_union", "keep_higher_confidence")

_LCA_ID_SET = frozenset(c.id for c in LCA_CLASSES)
_LCA_IDS_ASC = tuple(c.id for c in LCA_CLASSES)


@dataclass(frozen=True)
class RefinementConfig:
    mode: str = "per_class_mask"
    min_region_pixels: int = 1
    conflict_policy: str = "merge_union"

    def __post_init__(self):
        if self.mode not in MODES:
            raise BadConfig(f"refinement mode must be one of {MODES}, got {self.mode!r}")
        if self.conflict_policy not in CONFLICT_POLICIES:
            raise BadConfig(
                f"conflict policy must be one of {CONFLICT_POLICIES}, "
                f"got {self.conflict_policy!r}"
            )
        if self.min_region_pixels < 1:
            raise BadConfig("min_region_pixels must be >= 1")


def connected_components(mask: np.ndarray) -> list[np.ndarray]:
    """8-connectivity components of a binary mask, one bool mask each.

    Components are ordered by their first pixel in raster order, i.e. by
    top-most, then left-most pixel.
    """
    mask = np.asarray(mask) != 0
    labels, count = kernels.label_components(mask)
    return [labels == i for i in range(1, count + 1)]


def _mean_refiner_vector(image, region, refiners) -> np.ndarray:
    acc = np.zeros(len(LCA_CLASSES))
    for refiner in refiners:
        vec = np.asarray(refiner.classify_segment(image, region), dtype=np.float64)
        if vec.shape != (len(LCA_CLASSES),):
            raise ValueError(
                f"refiner returned {vec.shape}, expected ({len(LCA_CLASSES)},)"
            )
        if abs(float(vec.sum()) - 1.0) > 1e-6:
            raise ValueError("refiner probability vector does not sum to 1")
        acc += vec
    return acc / len(refiners)


def refine_lca(
    image: ImageRecord,
    mask: np.ndarray,
    refiners,
    cfg: RefinementConfig = RefinementConfig(),
) -> np.ndarray:
    """Run the refinement pass over an LCA label mask.

    Regions smaller than ``min_region_pixels`` keep their original label.
    When several regions map to the same target class, ``merge_union``
    relabels them all (with a logged warning), while
    ``keep_higher_confidence`` gives the target to the region with the
    highest ensemble probability and leaves the others unchanged.
    """
    refiners = list(refiners)
    if not refiners:
        raise NoRefiners("refinement requires at least one refiner")
    mask = np.asarray(mask, dtype=np.uint8)
    present = sorted(set(np.unique(mask).tolist()) - {0})
    bad = [v for v in present if v not in _LCA_ID_SET]
    if bad:
        raise NonLcaClassInMask(f"mask contains non-LCA class ids {bad}")

    regions: list[np.ndarray] = []
    originals: list[int] = []
    for class_id in present:
        indicator = mask == class_id
        if cfg.mode == "per_class_mask":
            parts = [indicator]
        else:
            parts = connected_components(indicator)
        for part in parts:
            regions.append(part)
            originals.append(class_id)

    # gather: query the ensemble for every region large enough
    proposals: list[tuple[int, float]] = []  # (target id, confidence) per region
    for region, original in zip(regions, originals):
        if int(np.count_nonzero(region)) < cfg.min_region_pixels:
            proposals.append((original, 1.0))
            continue
        vec = _mean_refiner_vector(image, region, refiners)
        best = int(vec.argmax())  # ascending-id order, first max = lowest id
        proposals.append((_LCA_IDS_ASC[best], float(vec[best])))

    # resolve duplicate targets
    final = [t for t, _ in proposals]
    by_target: dict[int, list[int]] = {}
    for i, (target, _) in enumerate(proposals):
        by_target.setdefault(target, []).append(i)
    for target, idxs in by_target.items():
        if len(idxs) < 2:
            continue
        if cfg.conflict_policy == "merge_union":
            logger.warning(
                "image %s: %d regions merged into class %d",
                image.image_id, len(idxs), target,
            )
            continue
        winner = max(idxs, key=lambda i: (proposals[i][1], -i))
        for i in idxs:
            if i != winner:
                final[i] = originals[i]

    out = mask.copy()
    for region, target in zip(regions, final):
        out[region] = target
    return out
