"""Build script: compiles the optional GF(256) kernel extension.

The package is fully functional without the extension (a pure-Python
backend is selected at import time), so any build failure here downgrades
to a warning instead of aborting the install.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("longstore: Cython not available, skipping compiled kernels", file=sys.stderr)
        return []
    from setuptools import Extension

    return cythonize(
        [
            Extension(
                "longstore._kernels._gf256",
                ["src/longstore/_kernels/_gf256.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"longstore: compiled kernels unavailable ({exc}); "
                  "falling back to pure Python", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"longstore: failed to build {ext.name} ({exc}); "
                  "falling back to pure Python", file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
