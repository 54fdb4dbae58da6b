import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package still works without the compiled kernels: a pure-numpy
    # fallback is selected at import time (see precipmerge._kernels).
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "precipmerge._kernels._splitkern",
                ["src/precipmerge/_kernels/_splitkern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
