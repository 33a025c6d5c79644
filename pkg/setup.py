"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and the
pure-numpy kernels are used instead.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SPINTHERMO_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "spinthermo._ckernels",
                    ["src/spinthermo/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
