import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "optbench._kernels._core",
    ["src/optbench/_kernels/_core.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    # fused multiply-add is an explicit kernel option; keep the compiler
    # from contracting the unfused path behind our back
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level=3))
