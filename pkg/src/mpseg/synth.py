"""Deterministic synthetic vessel-tree datasets for desk-scale testing.

Each image gets a trunk polyline plus a few side branches, rendered as
thick dark strokes over a noisy bright background (a rough caricature of
contrast-filled vessels on fluoroscopy).  Every branch becomes one polygon
annotation; branch placement is rejection-sampled so annotations never
share a pixel, and class assignment respects the image's vessel group, so
label sets always route back to the intended group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    DatasetIndex,
    ImageRecord,
    PolygonAnnotation,
    rasterize_ring,
    write_coco,
    write_image_png,
)
from .errors import BadConfig
from .taxonomy import CLASSES, VesselGroup, group_classes

_MASK64 = 2**64 - 1
_TAG_SYNTH = 11


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([e & _MASK64 for e in entropy]))


@dataclass(frozen=True)
class SynthConfig:
    n_images: int = 50
    rca_fraction: float = 1.0 / 3.0  # matches the roughly 1:2 RCA:LCA mix
    canvas: int = 512
    branch_count_range: tuple = (2, 5)  # side branches per image
    branch_width_range: tuple = (6, 14)  # stroke width, px
    seed: int = 0

    def __post_init__(self):
        if self.n_images < 0:
            raise BadConfig("n_images must be >= 0")
        if not 0.0 <= self.rca_fraction <= 1.0:
            raise BadConfig("rca_fraction must lie in [0, 1]")
        if self.canvas < 32:
            raise BadConfig("canvas must be >= 32 px")
        lo, hi = self.branch_count_range
        if lo < 0 or lo > hi:
            raise BadConfig("branch_count_range must satisfy 0 <= lo <= hi")
        wlo, whi = self.branch_width_range
        if wlo < 2 or wlo > whi:
            raise BadConfig("branch_width_range must satisfy 2 <= lo <= hi")


def _polyline(rng, start, heading, step, n_steps, jitter_deg):
    points = [np.asarray(start, dtype=np.float64)]
    angle = heading
    for _ in range(n_steps):
        angle += math.radians(rng.uniform(-jitter_deg, jitter_deg))
        points.append(points[-1] + step * np.array([math.cos(angle), math.sin(angle)]))
    return np.array(points)  # (n, 2) as (x, y)


def _ring_from_polyline(points: np.ndarray, half_width: float) -> np.ndarray:
    """Offset a polyline into a closed outline ring (x, y vertices)."""
    deltas = np.diff(points, axis=0)
    keep = np.linalg.norm(deltas, axis=1) > 1e-6
    points = np.vstack([points[:1], points[1:][keep]])
    if len(points) < 2:
        # clipping collapsed the path; emit a zero-area ring (no interior)
        return np.vstack([points[0], points[0], points[0]])
    deltas = np.diff(points, axis=0)
    seg_normals = np.stack([-deltas[:, 1], deltas[:, 0]], axis=1)
    seg_normals /= np.linalg.norm(seg_normals, axis=1, keepdims=True)
    normals = np.empty_like(points)
    normals[0] = seg_normals[0]
    normals[-1] = seg_normals[-1]
    for i in range(1, len(points) - 1):
        n = seg_normals[i - 1] + seg_normals[i]
        norm = np.linalg.norm(n)
        normals[i] = n / norm if norm > 1e-9 else seg_normals[i]
    left = points + half_width * normals
    right = points - half_width * normals
    return np.vstack([left, right[::-1]])


def _clip_ring(ring: np.ndarray, canvas: int) -> np.ndarray:
    return np.clip(ring, 0.0, float(canvas))


def _branch_candidate(rng, trunk, trunk_half, width_range, canvas):
    """One side-branch attempt: a ring budding off the trunk polyline."""
    seg = int(rng.integers(1, len(trunk) - 1))
    t = rng.uniform(0.15, 0.85)
    base = trunk[seg] + t * (trunk[seg + 1] - trunk[seg]) if seg + 1 < len(trunk) else trunk[seg]
    tangent = trunk[seg] - trunk[seg - 1]
    tangent = tangent / np.linalg.norm(tangent)
    side = 1.0 if rng.random() < 0.5 else -1.0
    angle = math.atan2(tangent[1], tangent[0]) + side * math.radians(rng.uniform(35.0, 75.0))
    width = rng.uniform(width_range[0], max(width_range[0], width_range[1] * 0.7))
    start = base + (trunk_half + width / 2.0 + 3.0) * np.array(
        [math.cos(angle), math.sin(angle)]
    )
    step = canvas * rng.uniform(0.05, 0.08)
    line = _polyline(rng, start, angle, step, int(rng.integers(3, 6)), 14.0)
    line = np.clip(line, canvas * 0.03, canvas * 0.97)
    return _clip_ring(_ring_from_polyline(line, width / 2.0), canvas)


def _generate_image(rng, cfg: SynthConfig, group: VesselGroup):
    """Returns (pixels, list of (class, ring)) for one image."""
    canvas = cfg.canvas
    wlo, whi = cfg.branch_width_range
    alphabet = group_classes(group)

    trunk_width = rng.uniform(max(wlo, whi * 0.7), whi)
    trunk_half = trunk_width / 2.0
    start = np.array([rng.uniform(0.35, 0.65) * canvas, 0.08 * canvas])
    heading = math.radians(90.0 + rng.uniform(-12.0, 12.0))
    trunk = _polyline(rng, start, heading, canvas * 0.11, 7, 15.0)
    trunk = np.clip(trunk, canvas * 0.05, canvas * 0.95)

    n_sides = int(rng.integers(cfg.branch_count_range[0], cfg.branch_count_range[1] + 1))
    n_sides = min(n_sides, len(alphabet) - 1)
    class_order = [alphabet[i] for i in rng.permutation(len(alphabet))[: n_sides + 1]]

    occupied = np.zeros((canvas, canvas), dtype=bool)
    branches = []

    trunk_ring = _clip_ring(_ring_from_polyline(trunk, trunk_half), canvas)
    trunk_mask = rasterize_ring(trunk_ring, canvas, canvas)
    occupied |= trunk_mask
    branches.append((class_order[0], trunk_ring))

    placed = 1
    for _ in range(n_sides):
        for _attempt in range(25):
            ring = _branch_candidate(rng, trunk, trunk_half, (wlo, whi), canvas)
            cand = rasterize_ring(ring, canvas, canvas)
            if cand.sum() < max(12, canvas // 16):
                continue
            if (cand & occupied).any():
                continue
            occupied |= cand
            branches.append((class_order[placed], ring))
            placed += 1
            break

    background = rng.normal(205.0, 12.0, (canvas, canvas))
    vessel = rng.normal(85.0, 10.0, (canvas, canvas))
    pixels = np.where(occupied, vessel, background)
    pixels = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    return pixels, branches


def generate(cfg: SynthConfig) -> tuple[DatasetIndex, dict]:
    """Generate a dataset; returns (index with pixel buffers, manifest)."""
    n_rca = int(round(cfg.n_images * cfg.rca_fraction))
    groups = [VesselGroup.RCA] * n_rca + [VesselGroup.LCA] * (cfg.n_images - n_rca)
    master = _rng(cfg.seed, 0, _TAG_SYNTH)
    groups = [groups[i] for i in master.permutation(len(groups))]

    images = []
    annotations = []
    counts = {c: 0 for c in CLASSES}
    ann_id = 0
    for idx, group in enumerate(groups):
        image_id = idx + 1
        rng = _rng(cfg.seed, image_id, _TAG_SYNTH)
        pixels, branches = _generate_image(rng, cfg, group)
        images.append(
            ImageRecord(image_id, cfg.canvas, cfg.canvas, f"{image_id:05d}.png", pixels)
        )
        for segment, ring in branches:
            ann_id += 1
            annotations.append(PolygonAnnotation(ann_id, image_id, segment, (ring,)))
            counts[segment] += 1

    manifest = {
        "n_images": cfg.n_images,
        "seed": cfg.seed,
        "canvas": cfg.canvas,
        "rca_images": sum(1 for g in groups if g is VesselGroup.RCA),
        "lca_images": sum(1 for g in groups if g is VesselGroup.LCA),
        "class_counts": {c.name: counts[c] for c in CLASSES},
    }
    return DatasetIndex(images, annotations), manifest


def write_synth_dataset(index: DatasetIndex, manifest: dict, out_dir) -> dict:
    """Write images/, annotations.json and manifest.json; returns the paths."""
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    for im in index.images:
        write_image_png(im.pixels, images_dir / im.file_name)
    ann_path = out_dir / "annotations.json"
    write_coco(index, ann_path)
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return {
        "images_dir": str(images_dir),
        "annotations": str(ann_path),
        "manifest": str(manifest_path),
    }
