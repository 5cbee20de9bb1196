"""COCO-style annotation ingestion, polygon rasterization, and dataset stats.

Mask conventions used throughout the package:

- label mask: 2-D uint8 array, 0 = background, 1..25 = segment class id
- binary mask: 2-D bool array

Annotation category ids in the input file are mapped through the category
*names* to the canonical taxonomy, so any id numbering round-trips.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from PIL import Image

from . import kernels
from .errors import (
    BadFoldCount,
    DanglingImageRef,
    DegeneratePolygon,
    ImageWithoutLabels,
    MalformedFile,
    OverlapWarning,
    SchemaViolation,
    UnknownImage,
)
from .taxonomy import (
    CLASSES,
    SegmentClass,
    VesselGroup,
    class_from_name,
    group_of_labels,
)


@dataclass(frozen=True, eq=False)
class ImageRecord:
    image_id: int
    width: int
    height: int
    file_name: str
    pixels: Optional[np.ndarray] = None  # uint8 (height, width)


@dataclass(frozen=True, eq=False)
class PolygonAnnotation:
    """One annotated segment: one or more polygon rings of a single class.

    Multi-ring annotations combine under the even-odd rule (rings XOR), so
    a ring inside another ring cuts a hole.
    """

    annotation_id: int
    image_id: int
    segment: SegmentClass
    rings: tuple  # of float64 (n_i, 2) vertex arrays, n_i >= 3

    @property
    def vertices(self) -> np.ndarray:
        """Vertices of the first (usually only) ring."""
        return self.rings[0]


class DatasetIndex:
    """Parsed images plus polygon annotations, with a label-mask cache."""

    def __init__(self, images: Iterable[ImageRecord], annotations: Iterable[PolygonAnnotation]):
        self.images = list(images)
        self.annotations = list(annotations)
        self._by_image_id: dict[int, ImageRecord] = {}
        for im in self.images:
            if im.image_id in self._by_image_id:
                raise SchemaViolation(f"duplicate image id {im.image_id}")
            self._by_image_id[im.image_id] = im
        self._anns_by_image: dict[int, list[PolygonAnnotation]] = {}
        seen_ann_ids = set()
        for ann in self.annotations:
            if ann.annotation_id in seen_ann_ids:
                raise SchemaViolation(f"duplicate annotation id {ann.annotation_id}")
            seen_ann_ids.add(ann.annotation_id)
            if ann.image_id not in self._by_image_id:
                raise DanglingImageRef(
                    f"annotation {ann.annotation_id} references unknown image {ann.image_id}"
                )
            self._anns_by_image.setdefault(ann.image_id, []).append(ann)
        for anns in self._anns_by_image.values():
            anns.sort(key=lambda a: a.annotation_id)
        self._mask_cache: dict[int, tuple[np.ndarray, int]] = {}

    def __len__(self) -> int:
        return len(self.images)

    def image(self, image_id: int) -> ImageRecord:
        try:
            return self._by_image_id[image_id]
        except KeyError:
            raise UnknownImage(f"no image with id {image_id}") from None

    def image_ids(self) -> list[int]:
        return sorted(self._by_image_id)

    def annotations_for(self, image_id: int) -> list[PolygonAnnotation]:
        self.image(image_id)
        return list(self._anns_by_image.get(image_id, []))

    def classes_of(self, image_id: int) -> set[SegmentClass]:
        return {a.segment for a in self.annotations_for(image_id)}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaViolation(message)


def _to_int(value, context: str) -> int:
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise SchemaViolation(f"{context}: expected an integer, got {value!r}") from None
    return out


def _parse_ring(flat, width: int, height: int, ann_id) -> np.ndarray:
    _require(
        isinstance(flat, (list, tuple)) and len(flat) % 2 == 0,
        f"annotation {ann_id}: segmentation ring must be a flat even-length list",
    )
    _require(
        len(flat) >= 6,
        f"annotation {ann_id}: polygon ring has fewer than 3 vertices",
    )
    try:
        ring = np.asarray(flat, dtype=np.float64).reshape(-1, 2)
    except (TypeError, ValueError):
        raise SchemaViolation(f"annotation {ann_id}: non-numeric polygon coordinates") from None
    _require(np.isfinite(ring).all(), f"annotation {ann_id}: non-finite polygon coordinates")
    ring[:, 0] = np.clip(ring[:, 0], 0.0, float(width))
    ring[:, 1] = np.clip(ring[:, 1], 0.0, float(height))
    return ring


def parse_annotations(path) -> DatasetIndex:
    """Parse and fully validate a COCO-style annotation document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise MalformedFile(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedFile(f"{path} is not valid JSON: {exc}") from exc

    _require(isinstance(doc, dict), "document root must be an object")
    for key in ("images", "annotations", "categories"):
        _require(key in doc, f"missing top-level key {key!r}")
        _require(isinstance(doc[key], list), f"{key!r} must be a list")

    cat_by_id: dict[int, SegmentClass] = {}
    for cat in doc["categories"]:
        _require(isinstance(cat, dict), "category entries must be objects")
        _require("id" in cat and "name" in cat, "category entries need id and name")
        cat_by_id[_to_int(cat["id"], "category id")] = class_from_name(str(cat["name"]))

    images = []
    dims: dict[int, tuple[int, int]] = {}
    for entry in doc["images"]:
        _require(isinstance(entry, dict), "image entries must be objects")
        for key in ("id", "width", "height", "file_name"):
            _require(key in entry, f"image entry missing {key!r}")
        width = _to_int(entry["width"], f"image {entry['id']} width")
        height = _to_int(entry["height"], f"image {entry['id']} height")
        _require(width >= 1 and height >= 1, f"image {entry['id']}: non-positive dimensions")
        rec = ImageRecord(_to_int(entry["id"], "image id"), width, height, str(entry["file_name"]))
        images.append(rec)
        dims[rec.image_id] = (width, height)

    annotations = []
    for entry in doc["annotations"]:
        _require(isinstance(entry, dict), "annotation entries must be objects")
        for key in ("id", "image_id", "category_id", "segmentation"):
            _require(key in entry, f"annotation entry missing {key!r}")
        ann_id = _to_int(entry["id"], "annotation id")
        image_id = _to_int(entry["image_id"], f"annotation {ann_id} image_id")
        if image_id not in dims:
            raise DanglingImageRef(
                f"annotation {ann_id} references unknown image {image_id}"
            )
        cat_id = _to_int(entry["category_id"], f"annotation {ann_id} category_id")
        _require(cat_id in cat_by_id, f"annotation {ann_id}: unlisted category id {cat_id}")
        seg = entry["segmentation"]
        _require(
            isinstance(seg, list) and len(seg) >= 1,
            f"annotation {ann_id}: segmentation must be a non-empty list of rings",
        )
        width, height = dims[image_id]
        rings = tuple(_parse_ring(flat, width, height, ann_id) for flat in seg)
        annotations.append(PolygonAnnotation(ann_id, image_id, cat_by_id[cat_id], rings))

    return DatasetIndex(images, annotations)


def rasterize_ring(vertices, width: int, height: int) -> np.ndarray:
    """Even-odd fill of one polygon ring, sampled at pixel centers."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise DegeneratePolygon(f"polygon needs >= 3 (x, y) vertices, got shape {verts.shape}")
    return kernels.rasterize_polygon_mask(verts[:, 0], verts[:, 1], width, height).astype(bool)


def rasterize_polygon(annotation: PolygonAnnotation, width: int, height: int) -> np.ndarray:
    """Rasterize an annotation; multiple rings combine even-odd (XOR)."""
    mask = np.zeros((height, width), dtype=bool)
    for ring in annotation.rings:
        mask ^= rasterize_ring(ring, width, height)
    return mask


def build_label_mask(index: DatasetIndex, image_id: int) -> np.ndarray:
    """Paint an image's annotations into a label mask.

    Annotations are painted in ascending annotation_id order, so later ids
    overwrite earlier ones on shared pixels; any doubly painted pixel is
    reported through an OverlapWarning carrying the pixel count.
    """
    if image_id not in index._mask_cache:
        im = index.image(image_id)
        mask = np.zeros((im.height, im.width), dtype=np.uint8)
        painted = np.zeros((im.height, im.width), dtype=bool)
        overlap = 0
        for ann in index.annotations_for(image_id):
            poly = rasterize_polygon(ann, im.width, im.height)
            overlap += int(np.count_nonzero(poly & painted))
            painted |= poly
            mask[poly] = ann.segment.id
        index._mask_cache[image_id] = (mask, overlap)
        if overlap:
            warnings.warn(OverlapWarning(image_id, overlap), stacklevel=2)
    mask, _ = index._mask_cache[image_id]
    return mask.copy()


def overlap_count(index: DatasetIndex, image_id: int) -> int:
    """Doubly painted pixel count for an image (computes the mask if needed)."""
    if image_id not in index._mask_cache:
        build_label_mask(index, image_id)
    return index._mask_cache[image_id][1]


def class_histogram(index: DatasetIndex) -> dict[SegmentClass, int]:
    """Annotation instance count per class; all 25 classes are present."""
    counts = {c: 0 for c in CLASSES}
    for ann in index.annotations:
        counts[ann.segment] += 1
    return counts


def vessel_ratio(index: DatasetIndex) -> tuple[int, int]:
    """(RCA image count, LCA image count) by per-image label routing.

    Images without annotations are reported via an ImageWithoutLabels
    warning and skipped.
    """
    rca = lca = 0
    for image_id in index.image_ids():
        classes = index.classes_of(image_id)
        if not classes:
            warnings.warn(ImageWithoutLabels(image_id), stacklevel=2)
            continue
        if group_of_labels(classes) is VesselGroup.RCA:
            rca += 1
        else:
            lca += 1
    return rca, lca


def kfold_split(index: DatasetIndex, k: int, seed: int) -> list[tuple[list[int], list[int]]]:
    """Deterministic k-fold split of the image ids.

    Returns k (train_ids, val_ids) pairs; the validation chunks partition
    the id set and their sizes differ by at most one.
    """
    ids = index.image_ids()
    if k < 2 or k > len(ids):
        raise BadFoldCount(f"fold count must be in [2, {len(ids)}], got {k}")
    rng = np.random.default_rng(seed % 2**64)
    perm = [ids[i] for i in rng.permutation(len(ids))]
    base, extra = divmod(len(ids), k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        val = sorted(perm[start : start + size])
        train = sorted(set(ids) - set(val))
        folds.append((train, val))
        start += size
    return folds


# --- PNG helpers -----------------------------------------------------------

def write_mask_png(mask: np.ndarray, path) -> None:
    """Write a label mask as an 8-bit single-channel PNG (value = class id)."""
    Image.fromarray(np.asarray(mask, dtype=np.uint8), mode="L").save(path, format="PNG")


def read_mask_png(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode != "L":
        img = img.convert("L")
    return np.asarray(img, dtype=np.uint8)


def write_image_png(pixels: np.ndarray, path) -> None:
    write_mask_png(pixels, path)


def read_image_png(path) -> np.ndarray:
    return read_mask_png(path)


def load_pixels(index: DatasetIndex, images_dir) -> DatasetIndex:
    """Return a new index whose ImageRecords carry pixel buffers.

    Files are looked up as <images_dir>/<file_name>; a missing file raises
    UnknownImage.
    """
    images_dir = Path(images_dir)
    loaded = []
    for im in index.images:
        path = images_dir / im.file_name
        if not path.exists():
            raise UnknownImage(f"no pixel file for image {im.image_id}: {path}")
        px = read_image_png(path)
        if px.shape != (im.height, im.width):
            raise SchemaViolation(
                f"image {im.image_id}: pixel file is {px.shape}, "
                f"index says {(im.height, im.width)}"
            )
        loaded.append(ImageRecord(im.image_id, im.width, im.height, im.file_name, px))
    return DatasetIndex(loaded, index.annotations)


def write_coco(index: DatasetIndex, path) -> None:
    """Serialize an index back to the COCO-style document format."""
    doc = {
        "images": [
            {"id": im.image_id, "width": im.width, "height": im.height, "file_name": im.file_name}
            for im in index.images
        ],
        "annotations": [
            {
                "id": ann.annotation_id,
                "image_id": ann.image_id,
                "category_id": ann.segment.id,
                "segmentation": [
                    [float(v) for v in ring.reshape(-1)] for ring in ann.rings
                ],
            }
            for ann in index.annotations
        ],
        "categories": [{"id": c.id, "name": c.name} for c in CLASSES],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
