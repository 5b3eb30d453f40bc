from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension("fitzcal._kernels", ["src/fitzcal/_kernels.pyx"]),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    ),
)
