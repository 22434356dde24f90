"""Build script: compiles the planar-world kernels as a C extension.

The extension is optional. If Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-Python kernels in
``svrmpc._kernels.planar_py`` (same results, slower).

``-ffp-contract=off`` keeps the compiled kernels bit-identical to the
Python fallback: both evaluate the same IEEE-754 double expressions and
FMA contraction would change the roundings.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        return []
    ext = Extension(
        "svrmpc._kernels._planar_cy",
        sources=["src/svrmpc/_kernels/_planar_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class optional_build_ext(build_ext):
    """Skip the extension instead of failing the whole install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"WARNING: compiled kernels skipped ({exc}); "
                  "using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "using pure-Python fallback")


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
