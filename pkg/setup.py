import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "skewshift._kernels",
                ["src/skewshift/_kernels.pyx"],
                include_dirs=[np.get_include(), "src/skewshift"],
                depends=["src/skewshift/_core.h"],
                # IEEE semantics required: backends are compared bit for bit
                # and the half-turn symmetry relies on exact negation.
                extra_compile_args=["-O3", "-march=native", "-ffp-contract=off", "-fno-fast-math"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
