"""Build script for the optional compiled line-search kernel.

The package works without the extension (a vectorized NumPy fallback is
selected at import time); building it just makes the per-element delay
line search faster and independent of BLAS threading.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "rainbowbf._kernels_cy",
                ["src/rainbowbf/_kernels_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
