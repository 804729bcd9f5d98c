import numpy
from setuptools import Extension, setup

# The compiled LSTM kernels are an optional speedup; the package falls back
# to the numpy implementation at import time when the extension is absent.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tempocast.nn._lstm_kernels",
                ["src/tempocast/nn/_lstm_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
