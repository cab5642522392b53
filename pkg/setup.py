import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension("fedstlf._kernels", ["src/fedstlf/_kernels.pyx"],
              include_dirs=[np.get_include()], extra_compile_args=["-O3"]),
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
