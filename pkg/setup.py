import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps double arithmetic identical to numpy's elementwise
# ops so the compiled split search is bit-compatible with the pure backend.
extensions = [
    Extension(
        "photocensus.kernels._fast",
        sources=["src/photocensus/kernels/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
