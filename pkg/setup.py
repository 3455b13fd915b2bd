"""Build script for the optional compiled sweep kernels.

The package is fully functional without the extension (a pure-Python
implementation of the same kernels is selected at import time), so a failed
compile only costs speed, not correctness.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "terracut.kernels._speed",
                ["src/terracut/kernels/_speed.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
