"""Build hook for the optional compiled enumeration kernel.

Metadata lives in pyproject.toml.  When Cython or a C compiler is missing the
extension is skipped and the pure-Python kernel is used at import time.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("ivpcap._fpkernel", ["src/ivpcap/_fpkernel.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
