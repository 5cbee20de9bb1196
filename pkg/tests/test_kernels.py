"""Parity and semantics tests for the compiled/fallback kernel pair."""

import numpy as np
import pytest

from helpers import brute_force_rasterize, flood_components
from mpseg import kernels
from mpseg.kernels import _reference

needs_native = pytest.mark.skipif(
    not kernels.HAVE_NATIVE, reason="compiled kernels not built"
)


def random_polygon(rng, snap=False):
    n = int(rng.integers(3, 12))
    xs = rng.uniform(-2.0, 34.0, n)
    ys = rng.uniform(-2.0, 34.0, n)
    if snap:  # stress vertex-on-scanline and pixel-center ties
        xs = np.round(xs * 2.0) / 2.0
        ys = np.round(ys * 2.0) / 2.0
    return xs, ys


def test_rasterize_square():
    xs = np.array([0.0, 4.0, 4.0, 0.0])
    ys = np.array([0.0, 0.0, 4.0, 4.0])
    mask = kernels.rasterize_polygon_mask(xs, ys, 8, 8)
    assert mask.sum() == 16
    assert mask[:4, :4].all() and not mask[4:, :].any() and not mask[:, 4:].any()


def test_rasterize_collinear_is_empty():
    xs = np.array([1.0, 3.0, 5.0])
    ys = np.array([1.0, 2.0, 3.0])
    assert kernels.rasterize_polygon_mask(xs, ys, 8, 8).sum() == 0


def test_rasterize_full_frame():
    xs = np.array([0.0, 8.0, 8.0, 0.0])
    ys = np.array([0.0, 0.0, 8.0, 8.0])
    assert kernels.rasterize_polygon_mask(xs, ys, 8, 8).all()


def test_rasterize_matches_brute_force():
    rng = np.random.default_rng(99)
    for trial in range(100):
        xs, ys = random_polygon(rng, snap=trial % 3 == 0)
        got = kernels.rasterize_polygon_mask(xs, ys, 32, 32)
        want = np.array(brute_force_rasterize(xs, ys, 32, 32), dtype=np.uint8)
        assert np.array_equal(got, want)


@needs_native
def test_rasterize_native_reference_parity():
    from mpseg.kernels import _core

    rng = np.random.default_rng(123)
    for trial in range(200):
        xs, ys = random_polygon(rng, snap=trial % 2 == 0)
        a = _core.rasterize_polygon_mask(xs, ys, 32, 32)
        b = _reference.rasterize_polygon_mask(xs, ys, 32, 32)
        assert np.array_equal(a, b)


def test_confusion_matrix_counts():
    gt = np.array([[0, 1], [2, 2]], dtype=np.uint8)
    pred = np.array([[0, 2], [2, 0]], dtype=np.uint8)
    cm = kernels.confusion_matrix(gt, pred, 3)
    assert cm[0, 0] == 1 and cm[1, 2] == 1 and cm[2, 2] == 1 and cm[2, 0] == 1
    assert cm.sum() == 4


@needs_native
def test_confusion_native_reference_parity():
    from mpseg.kernels import _core

    rng = np.random.default_rng(7)
    for _ in range(50):
        gt = rng.integers(0, 26, (16, 16)).astype(np.uint8)
        pred = rng.integers(0, 26, (16, 16)).astype(np.uint8)
        assert np.array_equal(
            _core.confusion_matrix(gt, pred, 26),
            _reference.confusion_matrix(gt, pred, 26),
        )


def test_label_components_diagonal_is_one_component():
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[1, 1] = True
    labels, count = kernels.label_components(mask)
    assert count == 1
    assert labels[0, 0] == labels[1, 1] == 1


def test_label_components_empty():
    labels, count = kernels.label_components(np.zeros((5, 5), dtype=bool))
    assert count == 0
    assert not labels.any()


def test_label_components_matches_flood_fill():
    rng = np.random.default_rng(31)
    for _ in range(30):
        mask = rng.random((20, 20)) < 0.35
        labels, count = kernels.label_components(mask)
        want = flood_components(mask.tolist())
        assert count == len(want)
        got = [set(zip(*np.nonzero(labels == i))) for i in range(1, count + 1)]
        got = [{(int(i), int(j)) for i, j in comp} for comp in got]
        assert sorted(map(sorted, got)) == sorted(map(sorted, want))


def test_label_components_raster_order():
    mask = np.zeros((6, 6), dtype=bool)
    mask[4, 1] = True  # lower-left blob
    mask[1, 4] = True  # upper-right blob appears first in raster order
    labels, count = kernels.label_components(mask)
    assert count == 2
    assert labels[1, 4] == 1 and labels[4, 1] == 2


@needs_native
def test_label_components_native_reference_parity():
    from mpseg.kernels import _core

    rng = np.random.default_rng(17)
    for _ in range(30):
        mask = rng.random((24, 24)) < 0.4
        la, ca = _core.label_components(mask)
        lb, cb = _reference.label_components(mask)
        assert ca == cb and np.array_equal(la, lb)


def test_erode_disc_square():
    mask = np.zeros((20, 20), dtype=bool)
    mask[5:15, 5:15] = True
    eroded = kernels.erode_disc(mask, 1)
    assert eroded.sum() == 64
    assert eroded[6:14, 6:14].all()


def test_erode_disc_radius_zero_is_identity():
    rng = np.random.default_rng(4)
    mask = rng.random((12, 12)) < 0.5
    assert np.array_equal(kernels.erode_disc(mask, 0), mask.astype(np.uint8))


def test_erode_disc_border_is_background():
    mask = np.ones((6, 6), dtype=bool)
    eroded = kernels.erode_disc(mask, 1)
    assert eroded.sum() == 16  # the 4x4 interior survives
    assert eroded[1:5, 1:5].all()


def test_erode_monotone_in_radius():
    rng = np.random.default_rng(12)
    mask = rng.random((32, 32)) < 0.8
    prev = kernels.erode_disc(mask, 0)
    for r in (1, 2, 3):
        cur = kernels.erode_disc(mask, r)
        assert not np.any(cur & ~prev)  # shrinks monotonically
        prev = cur


@needs_native
def test_erode_native_reference_parity():
    from mpseg.kernels import _core

    rng = np.random.default_rng(21)
    for r in range(4):
        for _ in range(10):
            mask = rng.random((32, 32)) < 0.7
            assert np.array_equal(
                _core.erode_disc(mask, r), _reference.erode_disc(mask, r)
            )
