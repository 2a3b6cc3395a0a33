import os

from setuptools import setup, Extension

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

_npyrandom_dir = os.path.join(os.path.dirname(np.__file__), "random", "lib")

ext = Extension(
    "forge._speed",
    ["src/forge/_speed.pyx"],
    include_dirs=[np.get_include()],
    library_dirs=[_npyrandom_dir],
    libraries=["npyrandom"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3"],
)

if cythonize is not None:
    ext_modules = cythonize([ext], language_level=3)
else:
    ext_modules = []

setup(ext_modules=ext_modules)
