#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Each kernel runs on representative inputs (512x512 frames, vessel-like
polygons and masks); outputs are checked for exact agreement before timing.
"""

import argparse
import math
import time

import numpy as np

from mpseg.kernels import _reference

try:
    from mpseg.kernels import _core
except ImportError:
    _core = None


def vessel_polygon(n_points=40, canvas=512):
    """A long wavy ribbon, similar to the synthetic vessel outlines."""
    ts = np.linspace(0.0, 1.0, n_points)
    spine_x = canvas * (0.3 + 0.35 * ts + 0.08 * np.sin(6.0 * math.pi * ts))
    spine_y = canvas * (0.1 + 0.8 * ts)
    left = np.stack([spine_x - 8.0, spine_y], axis=1)
    right = np.stack([spine_x + 8.0, spine_y], axis=1)[::-1]
    ring = np.vstack([left, right])
    return ring[:, 0].copy(), ring[:, 1].copy()


def build_inputs(seed=0, canvas=512):
    rng = np.random.default_rng(seed)
    xs, ys = vessel_polygon(canvas=canvas)
    gt = rng.integers(0, 26, (canvas, canvas)).astype(np.uint8)
    pred = rng.integers(0, 26, (canvas, canvas)).astype(np.uint8)
    blobs = rng.random((canvas, canvas)) < 0.45
    ribbon = _reference.rasterize_polygon_mask(xs, ys, canvas, canvas)
    return {
        "rasterize_polygon_mask": (xs, ys, canvas, canvas),
        "confusion_matrix": (gt, pred, 26),
        "label_components": (blobs,),
        "erode_disc": (ribbon, 2),
    }


def check_parity(inputs):
    for name, args in inputs.items():
        a = getattr(_core, name)(*args)
        b = getattr(_reference, name)(*args)
        if isinstance(a, tuple):
            ok = a[1] == b[1] and np.array_equal(a[0], b[0])
        else:
            ok = np.array_equal(a, b)
        if not ok:
            raise SystemExit(f"parity failure in {name}")


def bench(fn, args, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--canvas", type=int, default=512)
    args = parser.parse_args()

    if _core is None:
        raise SystemExit(
            "compiled kernels are not built; install with "
            "`pip install -e . --no-build-isolation` first"
        )

    inputs = build_inputs(canvas=args.canvas)
    check_parity(inputs)

    print(f"{'kernel':<28} {'native':>10} {'fallback':>10} {'speedup':>9}")
    print("-" * 60)
    for name, call_args in inputs.items():
        native = bench(getattr(_core, name), call_args, args.repeats)
        fallback = bench(getattr(_reference, name), call_args, args.repeats)
        print(
            f"{name:<28} {native * 1e3:>8.2f}ms {fallback * 1e3:>8.2f}ms "
            f"{fallback / native:>8.1f}x"
        )


if __name__ == "__main__":
    main()
