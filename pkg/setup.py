"""Build script for the optional compiled correlation kernel.

The package is fully functional without the extension: eegsync._backend
falls back to the vectorized numpy kernel when the compiled module is
absent. Build failures are therefore non-fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "eegsync._corrkernel",
                ["src/eegsync/_corrkernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
