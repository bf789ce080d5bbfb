"""Build script for the optional compiled contraction kernels.

The package is pure Python plus one optional Cython extension holding the hot
contraction loops. If Cython or a C compiler is unavailable the build falls
back to the pure-numpy kernels selected at import time; nothing else changes.
Set TNCS_NO_EXTENSION=1 to skip the extension entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the extension, warn and continue on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print("warning: compiled kernels not built, the pure-python fallback "
              f"will be used ({exc})")


ext_modules = []
if not os.environ.get("TNCS_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "tncs._kernels._ckern",
                    ["src/tncs/_kernels/_ckern.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
