"""Build script.

The compiled kernel module is optional. With Cython installed the
extension is built from the .pyx source; without it the checked-in
generated C file is compiled directly; when even the C build fails
(no compiler) the package installs anyway and falls back to the numpy
kernels at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

PYX = "src/igpsim/_kernels/_core.pyx"
GEN_C = "src/igpsim/_kernels/_core.c"


def _extension(sources):
    import numpy as np

    return Extension(
        "igpsim._kernels._core",
        sources,
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [_extension([PYX])], compiler_directives={"language_level": "3"}
    )
except ImportError:
    if os.path.exists(GEN_C):
        ext_modules = [_extension([GEN_C])]


class optional_build_ext(build_ext):
    """Give up on the extension instead of failing the whole install."""

    def run(self):
        try:
            super().run()
        except Exception as err:  # compiler missing or broken
            print(f"skipping compiled kernels ({err}); numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as err:
            print(f"skipping {ext.name} ({err}); numpy fallback will be used")


setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
