import numpy as np
from setuptools import Extension, setup

# The compiled kernels are an optional fast path: if Cython (or a C
# compiler) is unavailable the install still succeeds and the package
# falls back to the pure-numpy kernels at import time.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fairssl_lab.nnet._speedups",
                ["src/fairssl_lab/nnet/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
