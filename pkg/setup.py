from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "fabricsnn._kernels._ckernels",
                ["src/fabricsnn/_kernels/_ckernels.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # Pure-python kernels are selected at import when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules)
