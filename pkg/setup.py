"""Build script: compiles the optional simplex kernel extension.

If Cython or a C compiler is unavailable the install still succeeds and the
package falls back to the pure numpy kernels at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "splitbranch._kernels.cykern",
                ["src/splitbranch/_kernels/cykern.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
