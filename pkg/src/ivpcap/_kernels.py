"""Backend selection for the enumeration kernel.

``IVPCAP_BACKEND`` may be ``auto`` (default: compiled when importable),
``cython`` (fail if the extension is missing) or ``python``.
"""
from __future__ import annotations

import os

from . import _enum_py

_choice = os.environ.get("IVPCAP_BACKEND", "auto").lower()

try:
    from . import _fpkernel as _compiled
except ImportError:  # extension not built
    _compiled = None

if _choice == "python":
    fp_enumerate = _enum_py.fp_enumerate
    BACKEND = "python"
elif _compiled is not None:
    fp_enumerate = _compiled.fp_enumerate
    BACKEND = "cython"
elif _choice == "cython":
    raise ImportError("IVPCAP_BACKEND=cython but ivpcap._fpkernel is not built")
else:
    fp_enumerate = _enum_py.fp_enumerate
    BACKEND = "python"


def get_kernel(name: str):
    """Kernel by name, for benchmarks and cross-checks."""
    if name == "python":
        return _enum_py.fp_enumerate
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel not available")
        return _compiled.fp_enumerate
    raise ValueError(f"unknown backend {name!r}")
