import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SCADASIM_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "scadasim._kernels",
                    ["src/scadasim/_kernels.pyx"],
                    # keep float results bit-identical to the pure-Python path
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
