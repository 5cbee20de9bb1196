"""Numpy reference implementation of the pixel kernels.

Used when the compiled extension is unavailable (or MPSEG_NO_EXT=1).  The
compiled core in _core.pyx implements the same semantics; the parity tests
require pixel-exact agreement, so keep any arithmetic here expression-for-
expression identical to the Cython code.
"""

from __future__ import annotations

import numpy as np


def rasterize_polygon_mask(xs, ys, width: int, height: int) -> np.ndarray:
    """Even-odd polygon fill sampled at pixel centers.

    Pixel (row, col) is set iff its center (col + 0.5, row + 0.5) is inside
    the polygon under the even-odd rule: a point is inside iff a ray to +x
    crosses an odd number of edges, an edge (x1,y1)-(x2,y2) crossing the ray
    iff (y1 > py) != (y2 > py) at crossing x = (x2-x1)*(py-y1)/(y2-y1) + x1.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    out = np.zeros((height, width), dtype=np.uint8)
    if xs.shape[0] < 3:
        return out
    x1, y1 = xs, ys
    x2, y2 = np.roll(xs, -1), np.roll(ys, -1)
    px = np.arange(width, dtype=np.float64) + 0.5
    for row in range(height):
        py = row + 0.5
        crossing = (y1 > py) != (y2 > py)
        if not crossing.any():
            continue
        cx = (x2[crossing] - x1[crossing]) * (py - y1[crossing]) / (
            y2[crossing] - y1[crossing]
        ) + x1[crossing]
        cx.sort()
        # inside iff the count of crossings strictly right of the pixel
        # center is odd
        at_or_left = np.searchsorted(cx, px, side="right")
        out[row] = (cx.size - at_or_left) & 1
    return out


def confusion_matrix(gt, pred, n_labels: int) -> np.ndarray:
    """Joint per-pixel label histogram: out[g, p] = #{pixels: gt=g, pred=p}."""
    g = np.ascontiguousarray(gt, dtype=np.int64).ravel()
    p = np.ascontiguousarray(pred, dtype=np.int64).ravel()
    joint = g * n_labels + p
    counts = np.bincount(joint, minlength=n_labels * n_labels)
    return counts.reshape(n_labels, n_labels)


def label_components(mask) -> tuple[np.ndarray, int]:
    """8-connectivity component labeling.

    Labels are assigned in first-encounter raster order, so component k's
    first pixel in raster order is its top-most, then left-most pixel.
    Returns (int32 label image with 0 = background, component count).
    """
    m = np.ascontiguousarray(mask) != 0
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for si, sj in zip(*np.nonzero(m)):
        if labels[si, sj]:
            continue
        count += 1
        labels[si, sj] = count
        stack = [(int(si), int(sj))]
        while stack:
            i, j = stack.pop()
            for ni in range(max(i - 1, 0), min(i + 2, h)):
                for nj in range(max(j - 1, 0), min(j + 2, w)):
                    if m[ni, nj] and not labels[ni, nj]:
                        labels[ni, nj] = count
                        stack.append((ni, nj))
    return labels, count


def erode_disc(mask, radius: int) -> np.ndarray:
    """Binary erosion by a Euclidean disc (dx*dx + dy*dy <= radius*radius).

    Pixels outside the frame count as background, so blobs touching the
    border erode there too.  radius 0 is the identity.
    """
    m = np.ascontiguousarray(mask) != 0
    if radius <= 0:
        return m.astype(np.uint8)
    h, w = m.shape
    out = m.copy()
    r2 = radius * radius
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            if dy * dy + dx * dx > r2:
                continue
            shifted = np.zeros((h, w), dtype=bool)
            si0, si1 = max(dy, 0), min(h + dy, h)
            sj0, sj1 = max(dx, 0), min(w + dx, w)
            di0, di1 = max(-dy, 0), min(h - dy, h)
            dj0, dj1 = max(-dx, 0), min(w - dx, w)
            if si0 < si1 and sj0 < sj1:
                shifted[di0:di1, dj0:dj1] = m[si0:si1, sj0:sj1]
            out &= shifted
    return out.astype(np.uint8)
