"""Build script for the optional compiled trajectory kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time); building it just makes the stochastic unravelings faster.
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
                "qsinf._kernels._core",
                ["src/qsinf/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                # keep arithmetic identical to the numpy fallback
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
