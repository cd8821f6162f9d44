from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "svtkit._prox_kernel",
                ["src/svtkit/_prox_kernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ]
    )
except ImportError:
    # no Cython: install with the pure-Python kernel only
    ext_modules = []

setup(ext_modules=ext_modules)
