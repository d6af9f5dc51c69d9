import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RAILDESIGN_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("raildesign._core", ["src/raildesign/_core.pyx"])],
            language_level=3,
        )
        for ext in ext_modules:
            ext.optional = True
    except ImportError:
        # No Cython: install pure-Python only; raildesign.kernel falls back.
        ext_modules = []

setup(ext_modules=ext_modules)
