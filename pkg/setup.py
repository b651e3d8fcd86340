"""Build hook for the optional compiled stepping kernel.

The package works without it; ``gridpv.kernel`` falls back to the
pure-Python twin when the extension is missing.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

# no fused multiply-add contraction: the compiled and pure-Python kernels
# must round identically
CFLAGS = ["-O2", "-ffp-contract=off", "-fno-fast-math"]

ext_modules = []
if cythonize is not None and os.environ.get("GRIDPV_NO_EXT") != "1":
    ext_modules = cythonize(
        [Extension("gridpv._kernel", ["src/gridpv/_kernel.pyx"], extra_compile_args=CFLAGS)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
