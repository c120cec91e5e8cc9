"""Build script for the optional compiled Monte Carlo kernels.

The package is fully functional without the extension: ``polguard._backend``
falls back to the vectorized NumPy kernels when ``polguard._kernels`` is not
importable.  ``-ffp-contract=off`` keeps the compiled arithmetic IEEE-ordered
so both backends walk the same random stream to the same clicks.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython kernels if possible, otherwise install pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler/toolchain missing
            print(f"polguard: skipping compiled kernels ({exc!r}); "
                  "pure-Python backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"polguard: failed to build {ext.name} ({exc!r}); "
                  "pure-Python backend will be used")


def extensions():
    import os

    if not os.path.exists("src/polguard/_kernels.pyx"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "polguard._kernels",
        ["src/polguard/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
