"""The compiled core and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from recnw import _backend, _pycore
from recnw.estimator import UNIFORM01, EstimatorState
from recnw.kernels import EPANECHNIKOV, GAUSSIAN, custom_kernel

needs_compiled = pytest.mark.skipif(not _backend.has_compiled(), reason="compiled core not built")


@needs_compiled
@pytest.mark.parametrize("kernel", [GAUSSIAN, EPANECHNIKOV], ids=lambda k: k.name)
def test_stream_parity(kernel, rng):
    grid = np.linspace(-0.1, 1.1, 25)
    x, y = rng.uniform(size=2000), rng.normal(size=2000)
    a = EstimatorState(grid, kernel, 0.3, UNIFORM01).update_many(x, y)
    b = EstimatorState(grid, kernel, 0.3, UNIFORM01).update_many(x, y, force_python=True)
    assert a.n == b.n == 2000
    for name in ("H", "G", "Hp", "Gp", "C", "Cp"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), rtol=1e-12, atol=1e-300)


@needs_compiled
@pytest.mark.parametrize("kernel", [GAUSSIAN, EPANECHNIKOV], ids=lambda k: k.name)
def test_loo_parity(kernel, rng):
    x, y = rng.uniform(size=400), rng.normal(size=400)
    idx = np.array([0, 5, 199, 399])
    a = _backend.loo_sums(x, y, 0.28, kernel, idx)
    b = _backend.loo_sums(x, y, 0.28, kernel, idx, force_python=True)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_custom_kernel_uses_fallback(rng):
    k = custom_kernel(GAUSSIAN.pdf, GAUSSIAN.deriv, compact=False)
    x, y = rng.uniform(size=100), rng.normal(size=100)
    a = EstimatorState([0.5], k, 0.3).update_many(x, y)
    b = EstimatorState([0.5], GAUSSIAN, 0.3).update_many(x, y)
    np.testing.assert_allclose(a.H, b.H, rtol=1e-12)


def test_pycore_compact_all_outside():
    H, G, Hp, Gp = (np.zeros(2) for _ in range(4))
    grid = np.array([10.0, 20.0])
    n = _pycore.stream_update(grid, np.array([0.5, 0.6]), np.array([1.0, 2.0]), None, 0, 0.3,
                              EPANECHNIKOV, H, G, Hp, Gp)
    assert n == 2 and not G.any()


def test_env_forces_python_backend():
    env = dict(os.environ, RECNW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from recnw import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
