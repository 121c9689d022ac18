"""Build script: compiles the optional Cython pairwise-kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any build failure here downgrades to a
pure-Python install instead of aborting.
"""

import sys

from setuptools import Extension, setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        print("epaut: Cython/numpy unavailable, skipping compiled kernels", file=sys.stderr)
        return []
    ext = Extension(
        "epaut._pairwise",
        sources=["src/epaut/_pairwise.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


try:
    setup(ext_modules=extensions())
except SystemExit:
    raise
except Exception as exc:  # compiler missing, etc.
    print(f"epaut: extension build failed ({exc}); installing pure-Python version", file=sys.stderr)
    setup(ext_modules=[])
