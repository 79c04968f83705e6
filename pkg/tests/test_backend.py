import subprocess
import sys

import numpy as np
import pytest

from dcloss import _backend, _pykernels
from dcloss.gf import field, random_matrices

compiled = pytest.mark.skipif("compiled" not in _backend.available_backends(), reason="extension not built")


def test_python_backend_always_available():
    assert "python" in _backend.available_backends()
    previous = _backend.use_backend("python")
    try:
        assert _backend.backend_name() == "python"
    finally:
        _backend.use_backend(previous)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.use_backend("gpu")


@compiled
@pytest.mark.parametrize("pi,gb,bb", [(0.1, 0.05, 0.6), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (0.3, 0.2, 0.9)])
def test_erasure_kernels_agree(pi, gb, bb):
    from dcloss import _kernels
    u = np.random.default_rng(1).random((300, 37))
    np.testing.assert_array_equal(_kernels.erasure_windows(u, pi, gb, bb), _pykernels.erasure_windows(u, pi, gb, bb))


@compiled
@pytest.mark.parametrize("q", [2, 4, 16, 256, 65536, 5, 251])
def test_rank_kernels_agree(q):
    from dcloss import _kernels
    spec = field(q)
    rng = np.random.default_rng(q)
    mats = random_matrices(rng, 2000, 7, 5, spec)
    mats[rng.random(mats.shape[:2]) < 0.3] = 0  # erased rows
    a = _kernels.batch_rank(mats.copy(), spec.log_table, spec.exp_table, q, spec.binary)
    b = _pykernels.batch_rank(mats.copy(), spec.log_table, spec.exp_table, q, spec.binary)
    np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_falls_back_when_extension_missing():
    code = ("import sys; sys.modules['dcloss._kernels'] = None\n"
            "from dcloss import _backend\n"
            "from dcloss.gf import rank\n"
            "assert _backend.available_backends() == ['python']\n"
            "assert rank([[1, 2], [2, 4]], 5) == 1\n"
            "print(_backend.backend_name())\n")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
