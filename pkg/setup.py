import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "oprisklab._kernels",
                ["src/oprisklab/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
else:
    # No Cython available: install without the compiled extension.  The
    # package falls back to the pure NumPy kernels at import time.
    extensions = []

setup(ext_modules=extensions)
