"""Build script: compiles the optional fast-kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any compiler failure downgrades to a warning
instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, bad toolchain, ...
            warnings.warn(f"fast-kernel extension not built ({exc}); "
                          "falling back to the NumPy implementation")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"fast-kernel extension not built ({exc}); "
                          "falling back to the NumPy implementation")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "lfcde._corekernels",
        ["src/lfcde/_corekernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
