"""Build script. The compiled kernel is optional: when Cython or a C compiler is
missing the package installs pure-Python and selects the numpy fallback at import."""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extra_args = ["-O3"] if not sys.platform.startswith("win") else ["/O2"]
    ext_modules = cythonize(
        [
            Extension(
                "rateblur._kernels._mckernels",
                ["src/rateblur/_kernels/_mckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=extra_args,
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"rateblur: skipping compiled kernels ({exc!r}); "
                     "the numpy fallback will be used\n")

setup(ext_modules=ext_modules)
