"""Build script: compiles the optional fast kernel extension.

The package is fully functional without the extension (a pure-Python
twin of the kernels is selected at import time); the compiled module
only matters for throughput.  Set JOLT_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import setup


def _extensions():
    if os.environ.get("JOLT_NO_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        return []
    ext = Extension(
        "jolt._kernels",
        sources=["src/jolt/_kernels.pyx"],
        # Keep strict IEEE semantics so the compiled kernels agree with
        # the pure-Python twin to the last bit: no -ffast-math, no
        # arch-specific FMA contraction.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )


setup(ext_modules=_extensions())
