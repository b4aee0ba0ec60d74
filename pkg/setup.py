"""Build the optional Cython kernels.

The package works without them; ``interfirm.kernels`` falls back to the
numpy implementations when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("INTERFIRM_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "interfirm._kernels",
                    ["src/interfirm/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: both backends must agree bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
