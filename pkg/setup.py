"""Build script for the optional compiled kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the hot pixel loops faster.
Set MPSEG_SKIP_EXT=1 to install without compiling.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MPSEG_SKIP_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mpseg.kernels._core",
                sources=["src/mpseg/kernels/_core.pyx"],
                # -ffp-contract=off keeps float arithmetic bit-identical to
                # the numpy fallback (no FMA contraction in the rasterizer).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
