import os

import numpy as np
from setuptools import setup

ext_modules = []
if os.environ.get("RECNW_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        from setuptools import Extension

        extensions = [
            Extension(
                "recnw._core",
                ["src/recnw/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
