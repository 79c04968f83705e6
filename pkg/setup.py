import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; dcloss falls back at import time
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dcloss._kernels",
                ["src/dcloss/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
