"""Hot pixel kernels: compiled core with a numpy fallback.

The compiled extension (``mpseg.kernels._core``, built from ``_core.pyx``)
is preferred when importable; set ``MPSEG_NO_EXT=1`` to force the numpy
reference implementation.  Both backends implement identical semantics and
the test suite asserts pixel-exact parity.

Kernel surface (arrays are row-major, H rows by W cols):

- ``rasterize_polygon_mask(xs, ys, width, height)`` -> uint8 mask
- ``confusion_matrix(gt, pred, n_labels)`` -> int64 (n_labels, n_labels)
- ``label_components(mask)`` -> (int32 labels, count), 8-connectivity
- ``erode_disc(mask, radius)`` -> uint8 mask
"""

import os

from . import _reference

if os.environ.get("MPSEG_NO_EXT") == "1":
    _impl = _reference
    HAVE_NATIVE = False
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        HAVE_NATIVE = True
    except ImportError:
        _impl = _reference
        HAVE_NATIVE = False

BACKEND = "native" if HAVE_NATIVE else "reference"

rasterize_polygon_mask = _impl.rasterize_polygon_mask
confusion_matrix = _impl.confusion_matrix
label_components = _impl.label_components
erode_disc = _impl.erode_disc

__all__ = [
    "BACKEND",
    "HAVE_NATIVE",
    "confusion_matrix",
    "erode_disc",
    "label_components",
    "rasterize_polygon_mask",
]
