"""Builds the optional Cython convolution kernels.

The package works without the extension: looptune.neural.kernels falls
back to the NumPy implementation when the import fails.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "looptune.neural._kernels",
        ["src/looptune/neural/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
