"""Build script. Compiles the optional native kernel extension.

The package works without the extension (a pure NumPy fallback is selected
at import time), so any failure to compile is downgraded to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "se2n._kernels",
                ["src/se2n/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environments vary
    warnings.warn(f"native kernels not built ({exc}); pure NumPy backend will be used")

setup(ext_modules=ext_modules)
