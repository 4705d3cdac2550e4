"""Build the optional compiled walker; the package falls back to numpy without it."""

import os
import sys

import numpy as np
from setuptools import setup, Extension


def extensions():
    if os.environ.get("LANDSCAPE_LAB_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("Cython not available; installing the pure-Python walker only", file=sys.stderr)
        return []
    openmp = [] if os.environ.get("LANDSCAPE_LAB_NO_OPENMP") else ["-fopenmp"]
    ext = Extension(
        "landscape_lab._kernels",
        ["src/landscape_lab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": 3})


setup(ext_modules=extensions())
