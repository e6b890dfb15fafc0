"""Build script for the compiled recovery kernel.

The extension is optional at runtime: if it fails to build or import, the
package falls back to the pure-numpy implementation of the same loop.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hdacs._cosamp_cy",
                sources=["src/hdacs/_cosamp_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
