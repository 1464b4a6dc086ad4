"""Builds the optional compiled kernel extension.

The package works without it: glyphedit._kernels falls back to the pure
Python implementations when the extension is missing or when
GLYPHEDIT_PURE=1 is set.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "glyphedit._kernels._native",
                ["src/glyphedit/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
