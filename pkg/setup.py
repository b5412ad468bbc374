"""Build script for the optional compiled weight-assembly kernel.

The package is pure Python plus one Cython extension. If Cython or a C
compiler is unavailable the extension is skipped and the NumPy fallback
backend is used at runtime; set MORPHKIT_NO_EXT=1 to skip it on purpose.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, degrade to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken toolchain
            print(f"warning: skipping compiled kernel ({exc}); "
                  "the NumPy backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not compile {ext.name} ({exc}); "
                  "the NumPy backend will be used")


extensions = []
if not os.environ.get("MORPHKIT_NO_EXT"):
    try:
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "morphkit._kernels._idw_core",
                    ["src/morphkit/_kernels/_idw_core.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        print("warning: Cython not available; building without the compiled kernel")

setup(
    ext_modules=extensions,
    cmdclass={"build_ext": optional_build_ext},
)
