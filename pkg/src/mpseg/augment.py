"""Deterministic image+mask augmentation: rotation, translation, brightness, blur.

Geometric transforms resample the image bilinearly and the mask with
nearest-neighbor about the image center (so masks never acquire
interpolated phantom classes), filling out-of-frame pixels with 0 /
background.  Photometric transforms (brightness, Gaussian blur) touch the
image only, in that order, after the geometry.

A positive rotation turns the content counter-clockwise: rotating a square
canvas by exactly 90 degrees permutes the mask like ``np.rot90``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset import build_label_mask, write_image_png, write_mask_png
from .errors import BadConfig, BadRange, ShapeMismatch

_MASK64 = 2**64 - 1


@dataclass(frozen=True)
class AugmentSpec:
    rotation_deg: float = 0.0
    translate_px: tuple = (0, 0)  # (dx, dy) whole pixels, x = columns
    brightness_delta: float = 0.0  # added on the 8-bit scale, then clamped
    blur_sigma: float = 0.0
    seed: int = 0  # provenance: the seed that produced this spec


@dataclass(frozen=True)
class AugmentRanges:
    """Sampling ranges, inclusive on both ends."""

    rotation_deg: tuple = (-30.0, 30.0)
    translate_px: tuple = (-32, 32)
    brightness_delta: tuple = (-64.0, 64.0)
    blur_sigma: tuple = (0.0, 2.0)

    def __post_init__(self):
        for name in ("rotation_deg", "translate_px", "brightness_delta", "blur_sigma"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise BadRange(f"{name}: min {lo} exceeds max {hi}")
        if self.blur_sigma[0] < 0:
            raise BadRange("blur_sigma range must be non-negative")


def apply(image: np.ndarray, mask: np.ndarray, spec: AugmentSpec) -> tuple[np.ndarray, np.ndarray]:
    """Transform an image and its label mask consistently."""
    image = np.asarray(image, dtype=np.uint8)
    mask = np.asarray(mask, dtype=np.uint8)
    if image.shape != mask.shape:
        raise ShapeMismatch(f"image {image.shape} vs mask {mask.shape}")

    dx, dy = spec.translate_px
    if spec.rotation_deg != 0.0 or dx != 0 or dy != 0:
        # exact trig at quarter turns keeps coordinates on the integer grid,
        # so 90-degree rotations are pure index permutations
        quarter = spec.rotation_deg % 360.0
        if quarter in (0.0, 90.0, 180.0, 270.0):
            cos_t = (1.0, 0.0, -1.0, 0.0)[int(quarter // 90.0)]
            sin_t = (0.0, 1.0, 0.0, -1.0)[int(quarter // 90.0)]
        else:
            theta = math.radians(spec.rotation_deg)
            cos_t, sin_t = math.cos(theta), math.sin(theta)
        # inverse map: in = R_inv @ (out - t - c) + c, coords are (row, col)
        r_inv = np.array([[cos_t, sin_t], [-sin_t, cos_t]])
        center = (np.array(image.shape, dtype=np.float64) - 1.0) / 2.0
        shift = np.array([float(dy), float(dx)])
        offset = center - r_inv @ (center + shift)
        out_img = ndimage.affine_transform(
            image.astype(np.float64), r_inv, offset=offset, order=1,
            mode="constant", cval=0.0,
        )
        image = np.clip(np.rint(out_img), 0, 255).astype(np.uint8)
        mask = ndimage.affine_transform(
            mask, r_inv, offset=offset, order=0, mode="constant", cval=0,
        )
    else:
        image = image.copy()
        mask = mask.copy()

    if spec.brightness_delta != 0.0:
        shifted = image.astype(np.float64) + spec.brightness_delta
        image = np.clip(np.rint(shifted), 0, 255).astype(np.uint8)

    if spec.blur_sigma > 0.0:
        blurred = ndimage.gaussian_filter(
            image.astype(np.float64), spec.blur_sigma, mode="nearest"
        )
        image = np.clip(np.rint(blurred), 0, 255).astype(np.uint8)

    return image, mask


def sample_spec(seed: int, ranges: AugmentRanges = AugmentRanges()) -> AugmentSpec:
    """Uniform spec draw, deterministic per seed.

    Draw order is fixed: rotation, dx, dy, brightness, blur.  Degenerate
    ranges (min = max) yield that exact value.
    """
    rng = np.random.default_rng(seed & _MASK64)
    rotation = float(rng.uniform(*ranges.rotation_deg))
    t_lo, t_hi = ranges.translate_px
    dx = int(rng.integers(t_lo, t_hi + 1))
    dy = int(rng.integers(t_lo, t_hi + 1))
    brightness = float(rng.uniform(*ranges.brightness_delta))
    blur = float(rng.uniform(*ranges.blur_sigma))
    return AugmentSpec(rotation, (dx, dy), brightness, blur, seed)


def _variant_seed(seed: int, image_id: int, variant: int) -> int:
    ss = np.random.SeedSequence([seed & _MASK64, image_id & _MASK64, variant])
    return int(ss.generate_state(1)[0])


def augment_dataset(
    index,
    out_dir,
    n_per_image: int,
    seed: int,
    ranges: AugmentRanges = AugmentRanges(),
) -> dict:
    """Write n_per_image augmented (image, mask) pairs per dataset image.

    Images must carry pixel buffers.  Output layout: ``images/`` and
    ``masks/`` PNGs plus a provenance manifest mapping every output file to
    its source image and the exact spec used.  Returns the manifest.
    """
    if n_per_image < 1:
        raise BadConfig("n_per_image must be >= 1")
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    masks_dir = out_dir / "masks"
    images_dir.mkdir(parents=True, exist_ok=True)
    masks_dir.mkdir(parents=True, exist_ok=True)

    outputs = []
    for image_id in index.image_ids():
        im = index.image(image_id)
        if im.pixels is None:
            raise BadConfig(f"image {image_id} has no pixel buffer; pass an images dir")
        mask = build_label_mask(index, image_id)
        for variant in range(n_per_image):
            spec = sample_spec(_variant_seed(seed, image_id, variant), ranges)
            aug_image, aug_mask = apply(im.pixels, mask, spec)
            name = f"{image_id:05d}_a{variant:02d}.png"
            write_image_png(aug_image, images_dir / name)
            write_mask_png(aug_mask, masks_dir / name)
            outputs.append(
                {
                    "image_id": image_id,
                    "variant": variant,
                    "image": f"images/{name}",
                    "mask": f"masks/{name}",
                    "spec": {
                        "rotation_deg": spec.rotation_deg,
                        "translate_px": list(spec.translate_px),
                        "brightness_delta": spec.brightness_delta,
                        "blur_sigma": spec.blur_sigma,
                        "seed": spec.seed,
                    },
                }
            )

    manifest = {"seed": seed, "n_per_image": n_per_image, "outputs": outputs}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
