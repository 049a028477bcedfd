import math

import numpy as np
import pytest

from recnw.kernels import (EPANECHNIKOV, GAUSSIAN, KernelQuadratureError, check_moments,
                           custom_kernel, get_kernel, kernel_deriv, kernel_eval,
                           kernel_xi_squared, quad_over_support)

BUILTINS = [GAUSSIAN, EPANECHNIKOV]


def fd(k, u, h=1e-6):
    return (kernel_eval(k, u + h) - kernel_eval(k, u - h)) / (2 * h)


def test_eval_examples():
    assert kernel_eval(GAUSSIAN, 0.0) == pytest.approx(0.3989423, abs=1e-7)
    assert kernel_eval(EPANECHNIKOV, 0.0) == 0.75
    assert kernel_eval(EPANECHNIKOV, 2.0) == 0.0
    assert kernel_eval(EPANECHNIKOV, -1.0) == 0.0


def test_deriv_examples():
    assert kernel_deriv(GAUSSIAN, 0.0) == 0.0
    assert kernel_deriv(EPANECHNIKOV, 0.5) == pytest.approx(-0.75, abs=1e-15)
    assert fd(EPANECHNIKOV, 0.5) == pytest.approx(-0.75, abs=1e-6)
    expected = -math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert kernel_deriv(GAUSSIAN, 1.0) == pytest.approx(-0.2419707, abs=1e-7)
    assert kernel_deriv(GAUSSIAN, 1.0) == pytest.approx(expected, rel=1e-14)
    assert fd(GAUSSIAN, 1.0) == pytest.approx(expected, abs=1e-6)


def test_epanechnikov_boundary_derivative_is_zero():
    for u in (-1.0, 1.0, 1.5, -3.0):
        assert kernel_deriv(EPANECHNIKOV, u) == 0.0


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: k.name)
def test_deriv_matches_finite_difference(k, rng):
    u = rng.uniform(-5, 5, 1000)
    if k.compact:
        u = u[np.abs(np.abs(u) - 1.0) > 1e-3]
    h = 1e-6
    numeric = (k.pdf(u + h) - k.pdf(u - h)) / (2 * h)
    assert np.max(np.abs(k.deriv(u) - numeric)) <= 1e-5


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: k.name)
def test_symmetry(k, rng):
    u = rng.uniform(-5, 5, 500)
    np.testing.assert_array_equal(k.pdf(u), k.pdf(-u))


def test_xi_squared_closed_forms():
    assert kernel_xi_squared(GAUSSIAN) == pytest.approx(0.1410474, abs=1e-7)
    assert kernel_xi_squared(GAUSSIAN) == 1 / (4 * math.sqrt(math.pi))
    assert kernel_xi_squared(EPANECHNIKOV) == 1.5


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: k.name)
def test_xi_squared_by_quadrature(k):
    q = quad_over_support(k, lambda u: float(k.deriv(u)) ** 2)
    assert abs(q - k.xi_squared) <= 1e-8


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: k.name)
def test_moment_conditions(k):
    res = check_moments(k, tol=1e-6)
    assert set(res) == {"K", "K'", "xK'", "x2K'", "x4K", "x4|K'|"}
    assert all(ok for _, ok in res.values()), res


def test_custom_gaussian_xi_squared():
    k = custom_kernel(GAUSSIAN.pdf, GAUSSIAN.deriv, compact=False)
    assert k.name == "custom" and k.code is None
    assert abs(k.xi_squared - 0.1410474) <= 1e-6
    assert abs(k.xi_squared - GAUSSIAN.xi_squared) <= 1e-8


def test_custom_compact_kernel_biweight():
    # biweight: K = 15/16 (1-u^2)^2, K' = -15/4 u (1-u^2); xi^2 = 15/7
    pdf = lambda u: np.where(np.abs(u) < 1, 15 / 16 * (1 - np.asarray(u) ** 2) ** 2, 0.0)
    der = lambda u: np.where(np.abs(u) < 1, -15 / 4 * np.asarray(u) * (1 - np.asarray(u) ** 2), 0.0)
    k = custom_kernel(pdf, der, compact=True)
    assert k.xi_squared == pytest.approx(15 / 7, abs=1e-10)


def test_custom_kernel_divergent_quadrature_raises():
    pdf = lambda u: 0.0 * np.asarray(u)
    der = lambda u: np.abs(np.asarray(u, dtype=float)) ** -0.75
    with pytest.raises(KernelQuadratureError):
        custom_kernel(pdf, der, compact=True)


def test_get_kernel():
    assert get_kernel("gaussian") is GAUSSIAN
    with pytest.raises(ValueError):
        get_kernel("triangle")


def test_array_evaluation():
    u = np.array([-2.0, 0.0, 0.5])
    np.testing.assert_allclose(kernel_eval(EPANECHNIKOV, u), [0.0, 0.75, 0.5625])
