import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CORPUSCRAWL_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        # no Cython: the package runs on the numpy fallback kernel
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "corpuscrawl.curation._kernels",
                ["src/corpuscrawl/curation/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
