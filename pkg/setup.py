"""Build the optional Cython kernels; the package works without them."""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RESCUECTX_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rescuectx._speedups",
                    ["src/rescuectx/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
