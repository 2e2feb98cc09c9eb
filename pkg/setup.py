"""Builds the optional compiled kernels; the package works without them."""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("MA_LAB_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension("ma_lab._kernels", ["src/ma_lab/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"])
    return cythonize([ext], language_level=3, quiet=True)


setup(ext_modules=_extensions())
