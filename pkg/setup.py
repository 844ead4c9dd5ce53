import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mrpsim.kernels._ckern",
                ["src/mrpsim/kernels/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython at build time: ship pure Python, the package falls back at import.
    extensions = []

setup(ext_modules=extensions)
