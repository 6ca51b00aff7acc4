"""Build script for the optional Cython rolling-statistics kernel.

The package works without the extension (a pure-Python backend is selected
at import time); the extension only accelerates the hot per-candle loop.
"""

import numpy
from setuptools import setup
from setuptools.extension import Extension

from Cython.Build import cythonize

extensions = [
    Extension(
        "pumpscan._kernels._rolling_cy",
        ["src/pumpscan/_kernels/_rolling_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
)
