"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time); the extension only accelerates interpolation, skewed kernel
sums and the time-march inner loop.  If no C toolchain is available the
build degrades to pure Python instead of failing.
"""
import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "cornerflow._fastpath",
                ["src/cornerflow/_fastpath.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print("cornerflow: skipping compiled extension (%s)" % exc, file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
