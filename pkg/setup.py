"""Build hook: compile the optional Cython moment kernel.

The compiled extension is an accelerator only; if the toolchain is missing
the install proceeds and the package falls back to the numpy kernel at
import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "blowuplab._kernels._core",
                ["src/blowuplab/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except Exception as exc:  # noqa: BLE001 - any build-chain failure disables the accelerator
    print(f"blowuplab: skipping compiled kernel ({exc!r}); numpy fallback will be used")

setup(ext_modules=ext_modules)
