"""Build the optional Cython kernel extension.

The package works without the extension (pure numpy fallback in
lexplain.kernels.pylib); building it just makes training and occlusion
scoring faster. A failed compile is therefore non-fatal.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lexplain.kernels.cylib",
                ["src/lexplain/kernels/cylib.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
