"""Build script: compiles the optional Cython propagation kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compilation only costs speed, not correctness.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"WARNING: building qoctl._kernels._step failed ({exc}); "
                  "falling back to the pure-Python kernels", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python kernels", file=sys.stderr)


def extensions():
    import os
    if not os.path.exists("src/qoctl/_kernels/_step.pyx"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "qoctl._kernels._step",
        sources=["src/qoctl/_kernels/_step.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
