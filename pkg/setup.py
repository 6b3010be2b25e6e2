"""Build the optional compiled kernels.

The package works without them: ``bubblespec._kernels`` falls back to
numpy implementations when the extension is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("BUBBLESPEC_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "bubblespec._ckernels",
                ["src/bubblespec/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
