import os
import subprocess
import sys

import numpy as np
import pytest

from cgpt_sense import kernels
from cgpt_sense._jit import HAVE_NUMBA, thread_count

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable or disabled")


@pytest.fixture
def rng():
    return np.random.default_rng(11)


@needs_numba
def test_log_distance_backends_agree(rng):
    x, y = rng.standard_normal((40, 2)), rng.standard_normal((30, 2))
    y[0] = x[0]
    a, b = kernels.log_distance_np(x, y), kernels.log_distance_nb(x, y)
    assert a[0, 0] == 0.0 and b[0, 0] == 0.0
    assert np.allclose(a, b, rtol=1e-13, atol=1e-14)


@needs_numba
def test_normal_dipole_backends_agree(rng):
    x, y = rng.standard_normal((40, 2)), rng.standard_normal((30, 2)) + 5.0
    nu = rng.standard_normal((40, 2))
    nu /= np.linalg.norm(nu, axis=1, keepdims=True)
    assert np.allclose(kernels.normal_dipole_np(x, nu, y), kernels.normal_dipole_nb(x, nu, y), rtol=1e-13, atol=1e-14)


@needs_numba
def test_msr_kernels_backends_agree(rng):
    G = rng.standard_normal((7, 9, 6))
    V = rng.standard_normal((7, 6))
    B = rng.standard_normal((7, 9))
    assert np.allclose(kernels.msr_forward_np(G, V), kernels.msr_forward_nb(G, V), rtol=1e-13)
    assert np.allclose(kernels.msr_adjoint_np(G, B), kernels.msr_adjoint_nb(G, B), rtol=1e-13)


def test_log_distance_values():
    x = np.array([[0.0, 0.0], [3.0, 4.0]])
    y = np.array([[0.0, 0.0]])
    assert np.allclose(kernels.log_distance(x, y).ravel(), [0.0, np.log(5.0)])


def test_env_flag_selects_numpy():
    env = dict(os.environ, CGPT_SENSE_DISABLE_JIT="1")
    out = subprocess.run(
        [sys.executable, "-c", "from cgpt_sense import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_thread_override(monkeypatch):
    monkeypatch.setenv("CGPT_SENSE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("CGPT_SENSE_THREADS", "0")
    with pytest.raises(ValueError):
        thread_count()
