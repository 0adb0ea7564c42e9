import os

from setuptools import Extension, setup

# The compiled kernels are optional: macap falls back to the pure-numpy
# backend when macap._core is absent.  Set MACAP_SKIP_EXT=1 to force a
# pure-python install.
ext_modules = []
if os.environ.get("MACAP_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("macap._core", sources=["src/macap/_core.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
