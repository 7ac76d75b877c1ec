"""Build script: compiles the optional Cython stepping kernel.

The package works without the extension (pure-Python loop is selected at
import time), so a failed compile only costs speed.  Build in place with
    python setup.py build_ext --inplace
or let pip do it during install.
"""
from setuptools import setup, Extension

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "vswtsim._kernel",
                ["src/vswtsim/_kernel.pyx"],
                # -ffp-contract=off keeps the compiled kernel bit-identical
                # to the pure-Python loop (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
