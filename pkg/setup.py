from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # numpy fallback in cglwave._kernels_py takes over
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "cglwave._kernels",
                ["src/cglwave/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
