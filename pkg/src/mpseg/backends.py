"""Pluggable predictor contracts and deterministic built-in backends.

Real models run out of process and integrate through PSTK files; the
built-ins here (oracles, optionally corrupted, plus constants) let the
whole pipeline run and be tested without any trained network.

Every built-in is a pure function of its configuration seed and the query:
per-image randomness comes from a stream keyed on (seed, image_id), and the
refiner additionally keys on a fingerprint of the query mask, so results
never depend on call order or thread count.
"""

from __future__ import annotations

import abc
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import DatasetIndex, ImageRecord, build_label_mask
from .errors import (
    BadConfig,
    ClassListMismatch,
    EmptyMask,
    MaskOutsideImage,
    MissingStack,
    ShapeMismatch,
)
from .fusion import ProbabilityStack, encode_onehot, read_pstk
from .taxonomy import LCA_CLASSES, VesselGroup, group_classes, group_of_labels

_MASK64 = 2**64 - 1

# stream tags keep draws of co-seeded backends decorrelated
_TAG_CLASSIFIER = 1
_TAG_SEGMENTATION = 2
_TAG_REFINER = 3

LCA_IDS = np.array([c.id for c in LCA_CLASSES], dtype=np.int64)


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([e & _MASK64 for e in entropy])
    )


class VesselClassifierBackend(abc.ABC):
    """Stage-1 contract: image -> (vessel group, confidence in [0, 1])."""

    @abc.abstractmethod
    def classify(self, image: ImageRecord) -> tuple[VesselGroup, float]:
        ...


class SegmentationBackend(abc.ABC):
    """Stage-2 contract: (image, group) -> probability stack for that group."""

    @abc.abstractmethod
    def segment(self, image: ImageRecord, group: VesselGroup) -> ProbabilityStack:
        ...


class RefinementBackend(abc.ABC):
    """Stage-3 contract: (image, region mask) -> probabilities over the 17
    LCA classes in ascending-id order, summing to 1 within 1e-6."""

    @abc.abstractmethod
    def classify_segment(self, image: ImageRecord, mask: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class CorruptionConfig:
    """Controlled degradation knobs for the segmentation oracle."""

    label_permute_prob: float = 0.0
    erosion_radius: int = 0
    drop_class_prob: float = 0.0
    prob_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.label_permute_prob <= 1.0:
            raise BadConfig("label_permute_prob must lie in [0, 1]")
        if not 0.0 <= self.drop_class_prob <= 1.0:
            raise BadConfig("drop_class_prob must lie in [0, 1]")
        if self.erosion_radius < 0:
            raise BadConfig("erosion_radius must be >= 0")
        if self.prob_noise_sigma < 0:
            raise BadConfig("prob_noise_sigma must be >= 0")


class OracleVesselClassifier(VesselClassifierBackend):
    """Routes by the image's ground-truth labels, flipped with flip_prob."""

    def __init__(self, index: DatasetIndex, flip_prob: float = 0.0, seed: int = 0):
        if not 0.0 <= flip_prob <= 1.0:
            raise BadConfig("flip_prob must lie in [0, 1]")
        self.index = index
        self.flip_prob = flip_prob
        self.seed = seed

    def classify(self, image: ImageRecord) -> tuple[VesselGroup, float]:
        truth = group_of_labels(self.index.classes_of(image.image_id))
        rng = _rng(self.seed, image.image_id, _TAG_CLASSIFIER)
        flipped = rng.random() < self.flip_prob
        if flipped:
            out = VesselGroup.LCA if truth is VesselGroup.RCA else VesselGroup.RCA
            return out, self.flip_prob
        return truth, 1.0 - self.flip_prob


class ConstantVesselClassifier(VesselClassifierBackend):
    def __init__(self, group: VesselGroup, confidence: float = 1.0):
        self.group = group
        self.confidence = confidence

    def classify(self, image: ImageRecord) -> tuple[VesselGroup, float]:
        return self.group, self.confidence


class OracleSegmentation(SegmentationBackend):
    """Serves the ground-truth mask as a one-hot stack, then degrades it.

    Degradations run in a fixed order per image: class drops, within-group
    label permutation (a derangement of the marked classes, so permuted
    planes always move), disc erosion, then clamped Gaussian noise.
    """

    def __init__(self, index: DatasetIndex, cfg: CorruptionConfig = CorruptionConfig()):
        self.index = index
        self.cfg = cfg

    def segment(self, image: ImageRecord, group: VesselGroup) -> ProbabilityStack:
        cfg = self.cfg
        gt = build_label_mask(self.index, image.image_id)
        classes = group_classes(group)
        ids = np.array([c.id for c in classes], dtype=np.uint8)
        restricted = np.where(np.isin(gt, ids), gt, 0).astype(np.uint8)
        stack = encode_onehot(restricted, classes)
        planes = stack.planes
        k = len(classes)
        rng = _rng(cfg.seed, image.image_id, _TAG_SEGMENTATION)

        drops = rng.random(k) < cfg.drop_class_prob
        if drops.any():
            planes[drops] = 0.0

        marked = np.flatnonzero(rng.random(k) < cfg.label_permute_prob)
        if marked.size >= 2:
            targets = _derangement(rng, marked)
            moved = planes[marked].copy()
            planes[targets] = moved

        if cfg.erosion_radius > 0:
            for i in range(k):
                planes[i] = kernels.erode_disc(planes[i] > 0, cfg.erosion_radius)

        if cfg.prob_noise_sigma > 0:
            planes += rng.normal(0.0, cfg.prob_noise_sigma, planes.shape)
            np.clip(planes, 0.0, 1.0, out=planes)

        return ProbabilityStack(classes, planes)


def _derangement(rng: np.random.Generator, indices: np.ndarray) -> np.ndarray:
    """A permutation of ``indices`` with no fixed point (len >= 2)."""
    while True:
        perm = rng.permutation(indices)
        if not np.any(perm == indices):
            return perm


class ConstantSegmentation(SegmentationBackend):
    """Every plane holds one constant probability (decodes to background
    for values below the threshold)."""

    def __init__(self, value: float = 0.0):
        if not 0.0 <= value <= 1.0:
            raise BadConfig("value must lie in [0, 1]")
        self.value = value

    def segment(self, image: ImageRecord, group: VesselGroup) -> ProbabilityStack:
        classes = group_classes(group)
        planes = np.full((len(classes), image.height, image.width), self.value)
        return ProbabilityStack(classes, planes)


class FileSegmentationBackend(SegmentationBackend):
    """Serves externally computed stacks from <dir>/<image_id>.pstk files."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def segment(self, image: ImageRecord, group: VesselGroup) -> ProbabilityStack:
        path = self.directory / f"{image.image_id}.pstk"
        if not path.exists():
            raise MissingStack(f"no stack file for image {image.image_id}: {path}")
        stack = read_pstk(path)
        if stack.group is not group:
            raise ClassListMismatch(
                f"{path}: stack is {stack.group.value}, requested {group.value}"
            )
        if (stack.height, stack.width) != (image.height, image.width):
            raise ShapeMismatch(
                f"{path}: stack is {stack.height}x{stack.width}, "
                f"image is {image.height}x{image.width}"
            )
        return stack


def _mask_fingerprint(mask: np.ndarray) -> int:
    return zlib.crc32(np.packbits(mask).tobytes())


def _lca_vote_counts(label_mask: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Pixel count per LCA class (ascending id) under a region mask."""
    values = label_mask[region]
    counts = np.bincount(values, minlength=26)
    return counts[LCA_IDS]


class OracleRefiner(RefinementBackend):
    """One-hot on the majority ground-truth class under the query mask,
    swapped to a uniformly random other LCA class with error_prob."""

    def __init__(self, index: DatasetIndex, error_prob: float = 0.0, seed: int = 0):
        if not 0.0 <= error_prob <= 1.0:
            raise BadConfig("error_prob must lie in [0, 1]")
        self.index = index
        self.error_prob = error_prob
        self.seed = seed

    def classify_segment(self, image: ImageRecord, mask: np.ndarray) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (image.height, image.width):
            raise MaskOutsideImage(
                f"query mask is {mask.shape}, image is {(image.height, image.width)}"
            )
        if not mask.any():
            raise EmptyMask("query mask has no pixels")
        gt = build_label_mask(self.index, image.image_id)
        counts = _lca_vote_counts(gt, mask)
        if counts.sum() == 0:
            # region covers no LCA ground truth: no information
            return np.full(len(LCA_CLASSES), 1.0 / len(LCA_CLASSES))
        winner = int(counts.argmax())
        rng = _rng(self.seed, image.image_id, _TAG_REFINER, _mask_fingerprint(mask))
        if rng.random() < self.error_prob:
            other = int(rng.integers(len(LCA_CLASSES) - 1))
            winner = other if other < winner else other + 1
        vec = np.zeros(len(LCA_CLASSES))
        vec[winner] = 1.0
        return vec


class EchoRefiner(RefinementBackend):
    """Answers with the majority class of a fixed label mask under the query
    region; with the pipeline's own prediction this echoes the input label."""

    def __init__(self, label_mask: np.ndarray):
        self.label_mask = np.asarray(label_mask, dtype=np.uint8)

    def classify_segment(self, image: ImageRecord, mask: np.ndarray) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.label_mask.shape:
            raise MaskOutsideImage(
                f"query mask is {mask.shape}, label mask is {self.label_mask.shape}"
            )
        if not mask.any():
            raise EmptyMask("query mask has no pixels")
        counts = _lca_vote_counts(self.label_mask, mask)
        vec = np.zeros(len(LCA_CLASSES))
        if counts.sum() == 0:
            return np.full(len(LCA_CLASSES), 1.0 / len(LCA_CLASSES))
        vec[int(counts.argmax())] = 1.0
        return vec
