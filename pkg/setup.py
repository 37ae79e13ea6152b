"""Build script: compiles the optional Cython rate kernel.

Set DECOYKIT_NO_EXT=1 to skip the extension entirely; the package then runs
on the pure-numpy kernel selected at import time.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DECOYKIT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "decoykit._kernel._ckernel",
                    ["src/decoykit/_kernel/_ckernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
