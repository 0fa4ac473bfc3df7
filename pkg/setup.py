from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the pure-Python kernels are used
    extensions = []
else:
    extensions = cythonize(
        [Extension("joinagg._ckernels", ["src/joinagg/_ckernels.pyx"], optional=True)],
        language_level=3,
    )

setup(ext_modules=extensions)
