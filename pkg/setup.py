"""Build script: compiles the optional split-search kernel.

The package works without the extension (a numpy fallback is selected at
import); the build therefore tolerates a missing or failing Cython toolchain.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "metainf._kernels._split_cy",
                sources=["src/metainf/_kernels/_split_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    import sys

    print(f"metainf: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
