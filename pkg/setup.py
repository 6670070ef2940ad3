from setuptools import Extension, setup

# The compiled kernel is optional: without Cython (or a C compiler) the
# package falls back to the pure-Python twin in orbitsim/_kernels/pure.py.
# -ffp-contract=off keeps the compiled arithmetic bit-identical to the
# pure-Python path (no FMA contraction).
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "orbitsim._kernels._core",
                sources=["src/orbitsim/_kernels/_core.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
