import os
import subprocess
import sys

import numpy as np
import pytest

from ivpcap import _enum_py, _kernels
from ivpcap.acceptance import random_unipotent
from ivpcap.lattice import enumerate_ellipsoid, gamma_power_ellipsoid, pulled_back

try:
    compiled = _kernels.get_kernel("cython")
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernel not built")


@needs_compiled
@pytest.mark.parametrize("count_only", [False, True])
def test_kernels_agree(count_only):
    rng = np.random.default_rng(4)
    for d in range(1, 5):
        e = pulled_back(gamma_power_ellipsoid("0.85", 3, d), random_unipotent(rng, d))
        a = enumerate_ellipsoid(e, kernel=_enum_py.fp_enumerate, count_only=count_only)
        b = enumerate_ellipsoid(e, kernel=compiled, count_only=count_only)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.ambiguous, b.ambiguous)
        assert (a.count_exclusive, a.count_inclusive) == (b.count_exclusive, b.count_inclusive)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_kernel("fortran")


def test_python_backend_env():
    env = dict(os.environ, IVPCAP_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from ivpcap import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
