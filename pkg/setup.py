"""Build script for the optional compiled current-solver kernel.

The package works without the extension (a pure-numpy backend is selected
at import time), so the extension is marked optional: a failed compile
degrades to the fallback instead of failing the install.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "pixelcode._kernels._native",
        ["src/pixelcode/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level="3")

setup(ext_modules=ext_modules)
