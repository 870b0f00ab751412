"""Build script for the compiled LSTM kernels.

The extension is optional: set UAVAD_SKIP_EXT=1 (or install without Cython)
to get a pure-Python package that falls back to the NumPy kernels.
"""

import os

from setuptools import Extension, setup

extensions = []
if not os.environ.get("UAVAD_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = cythonize(
            [
                Extension(
                    "uavad.neural._core",
                    ["src/uavad/neural/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=extensions)
