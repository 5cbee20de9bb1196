# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels.

Semantics must stay expression-for-expression identical to the numpy
fallback in _reference.py; the parity tests require pixel-exact agreement.
"""

import numpy as np


def rasterize_polygon_mask(xs, ys, int width, int height):
    """Even-odd polygon fill sampled at pixel centers (see _reference)."""
    xs_arr = np.ascontiguousarray(xs, dtype=np.float64)
    ys_arr = np.ascontiguousarray(ys, dtype=np.float64)
    out = np.zeros((height, width), dtype=np.uint8)
    cdef Py_ssize_t n = xs_arr.shape[0]
    if n < 3:
        return out
    cdef double[::1] vx = xs_arr
    cdef double[::1] vy = ys_arr
    cdef unsigned char[:, ::1] om = out
    crossings = np.empty(n, dtype=np.float64)
    cdef double[::1] cx = crossings
    cdef Py_ssize_t row, col, i, j, k, m, p
    cdef double py, px, x1, y1, x2, y2, v
    for row in range(height):
        py = row + 0.5
        m = 0
        for i in range(n):
            j = i + 1
            if j == n:
                j = 0
            x1 = vx[i]
            y1 = vy[i]
            x2 = vx[j]
            y2 = vy[j]
            if (y1 > py) != (y2 > py):
                cx[m] = (x2 - x1) * (py - y1) / (y2 - y1) + x1
                m += 1
        if m == 0:
            continue
        # insertion sort; m is at most one crossing per edge
        for i in range(1, m):
            v = cx[i]
            k = i - 1
            while k >= 0 and cx[k] > v:
                cx[k + 1] = cx[k]
                k -= 1
            cx[k + 1] = v
        p = 0  # crossings at or left of the pixel center
        for col in range(width):
            px = col + 0.5
            while p < m and cx[p] <= px:
                p += 1
            om[row, col] = <unsigned char> ((m - p) & 1)
    return out


def confusion_matrix(gt, pred, int n_labels):
    """Joint per-pixel label histogram: out[g, p] = #{pixels: gt=g, pred=p}."""
    g_arr = np.ascontiguousarray(gt, dtype=np.int64).ravel()
    p_arr = np.ascontiguousarray(pred, dtype=np.int64).ravel()
    if g_arr.shape[0] != p_arr.shape[0]:
        raise ValueError("gt and pred differ in size")
    for arr in (g_arr, p_arr):
        if arr.size and (arr.min() < 0 or arr.max() >= n_labels):
            raise ValueError("label value outside [0, n_labels)")
    out = np.zeros((n_labels, n_labels), dtype=np.int64)
    cdef long long[::1] g = g_arr
    cdef long long[::1] p = p_arr
    cdef long long[:, ::1] om = out
    cdef Py_ssize_t i, n = g_arr.shape[0]
    for i in range(n):
        om[g[i], p[i]] += 1
    return out


def label_components(mask):
    """8-connectivity component labeling, first-encounter raster order."""
    m_arr = (np.ascontiguousarray(mask) != 0).astype(np.uint8)
    cdef Py_ssize_t h = m_arr.shape[0]
    cdef Py_ssize_t w = m_arr.shape[1]
    labels = np.zeros((h, w), dtype=np.int32)
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef unsigned char[:, ::1] m = m_arr
    cdef int[:, ::1] lab = labels
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t si, sj, i, j, ni, nj, ilo, ihi, jlo, jhi, top
    cdef int count = 0
    for si in range(h):
        for sj in range(w):
            if m[si, sj] == 0 or lab[si, sj] != 0:
                continue
            count += 1
            lab[si, sj] = count
            stack[0] = si * w + sj
            top = 1
            while top > 0:
                top -= 1
                i = stack[top] // w
                j = stack[top] % w
                ilo = i - 1 if i > 0 else 0
                ihi = i + 2 if i + 2 < h else h
                jlo = j - 1 if j > 0 else 0
                jhi = j + 2 if j + 2 < w else w
                for ni in range(ilo, ihi):
                    for nj in range(jlo, jhi):
                        if m[ni, nj] != 0 and lab[ni, nj] == 0:
                            lab[ni, nj] = count
                            stack[top] = ni * w + nj
                            top += 1
    return labels, count


def erode_disc(mask, int radius):
    """Binary erosion by a Euclidean disc; outside the frame is background."""
    m_arr = (np.ascontiguousarray(mask) != 0).astype(np.uint8)
    if radius <= 0:
        return m_arr
    cdef Py_ssize_t h = m_arr.shape[0]
    cdef Py_ssize_t w = m_arr.shape[1]
    offs = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]
    offs_arr = np.asarray(offs, dtype=np.int64)
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] m = m_arr
    cdef unsigned char[:, ::1] om = out
    cdef long long[:, ::1] od = offs_arr
    cdef Py_ssize_t i, j, k, ni, nj, n_off = offs_arr.shape[0]
    cdef unsigned char keep
    for i in range(h):
        for j in range(w):
            if m[i, j] == 0:
                continue
            keep = 1
            for k in range(n_off):
                ni = i + od[k, 0]
                nj = j + od[k, 1]
                if ni < 0 or ni >= h or nj < 0 or nj >= w or m[ni, nj] == 0:
                    keep = 0
                    break
            om[i, j] = keep
    return out
