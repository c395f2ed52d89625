from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernels are an optional speedup; the package falls back to the
# numpy implementation when the extension is missing.
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "finedesign.kernels._speed",
                ["src/finedesign/kernels/_speed.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
