"""Smoothing kernels, their derivatives and the constant xi^2 = int K'(u)^2 du.

Two kernels are built in (Gaussian, Epanechnikov). A custom kernel is any
symmetric density supplied as a pair of vectorised callables ``(K, K')``;
its xi^2 is obtained by adaptive Gauss-Kronrod quadrature at construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# Gaussian mass beyond +-40 underflows double precision.
UNBOUNDED_LIMIT = 40.0
XI2_QUAD_ATOL = 1e-10


class KernelQuadratureError(ArithmeticError):
    """Adaptive quadrature failed for a custom kernel."""


def _gauss(u):
    u = np.asarray(u, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * u * u)


def _gauss_deriv(u):
    u = np.asarray(u, dtype=float)
    return -u * _gauss(u)


def _epan(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


def _epan_deriv(u):
    # K' is discontinuous at |u| = 1; we use 0 there, same as outside.
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, -1.5 * u, 0.0)


@dataclass(frozen=True)
class Kernel:
    """A symmetric smoothing kernel.

    Attributes
    ----------
    name : str
        ``"gaussian"``, ``"epanechnikov"`` or ``"custom"``.
    pdf, deriv : callable
        Vectorised K and K'.
    compact : bool
        True when the support is [-1, 1], False for an unbounded support.
    xi_squared : float
        int (K'(u))^2 du.
    code : int or None
        Identifier understood by the compiled core; None for custom kernels.
    """

    name: str
    pdf: Callable = field(repr=False)
    deriv: Callable = field(repr=False)
    compact: bool
    xi_squared: float
    code: Optional[int] = None

    @property
    def support(self):
        return (-1.0, 1.0) if self.compact else (-math.inf, math.inf)

    @property
    def quad_bounds(self):
        return (-1.0, 1.0) if self.compact else (-UNBOUNDED_LIMIT, UNBOUNDED_LIMIT)

    def __call__(self, u):
        return self.pdf(u)


def _quad(func, a, b, atol=XI2_QUAD_ATOL):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(func, a, b, epsabs=atol, epsrel=0.0,
                                    limit=500, points=[0.0])
        except integrate.IntegrationWarning as exc:
            raise KernelQuadratureError(str(exc)) from exc
    if not math.isfinite(val):
        raise KernelQuadratureError("non-finite quadrature result")
    return val


def quad_over_support(k: Kernel, func: Callable[[float], float], atol=XI2_QUAD_ATOL) -> float:
    """Integrate ``func`` over the quadrature range of ``k``'s support."""
    a, b = k.quad_bounds
    return _quad(func, a, b, atol)


GAUSSIAN = Kernel("gaussian", _gauss, _gauss_deriv, compact=False,
                  xi_squared=1.0 / (4.0 * math.sqrt(math.pi)), code=0)
EPANECHNIKOV = Kernel("epanechnikov", _epan, _epan_deriv, compact=True,
                      xi_squared=1.5, code=1)

BUILTIN = {"gaussian": GAUSSIAN, "epanechnikov": EPANECHNIKOV}


def custom_kernel(pdf: Callable, deriv: Callable, compact: bool) -> Kernel:
    """Build a kernel from user callables; xi^2 is integrated once here."""
    lo, hi = (-1.0, 1.0) if compact else (-UNBOUNDED_LIMIT, UNBOUNDED_LIMIT)
    xi2 = _quad(lambda u: float(deriv(u)) ** 2, lo, hi)
    if not xi2 > 0:
        raise KernelQuadratureError(f"xi^2 must be positive, got {xi2!r}")
    return Kernel("custom", pdf, deriv, compact=compact, xi_squared=xi2, code=None)


def get_kernel(name: str) -> Kernel:
    try:
        return BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of {sorted(BUILTIN)}") from None


def kernel_eval(k: Kernel, u):
    """K(u); zero outside [-1, 1] for compact kernels. Scalars in, scalars out."""
    out = k.pdf(u)
    return float(out) if np.ndim(out) == 0 else out


def kernel_deriv(k: Kernel, u):
    """K'(u), with K'(+-1) = 0 for the Epanechnikov kernel."""
    out = k.deriv(u)
    return float(out) if np.ndim(out) == 0 else out


def kernel_xi_squared(k: Kernel) -> float:
    return k.xi_squared


def moment_integrals(k: Kernel) -> dict:
    """The integrals bounded by the regularity conditions on K, by quadrature.

    Keys: ``K``, ``K'``, ``xK'``, ``x2K'`` (expected 1, 0, -1, 0) and the
    finite fourth moments ``x4K`` and ``x4|K'|``.
    """
    K = lambda x: float(k.pdf(x))
    Kp = lambda x: float(k.deriv(x))
    return {
        "K": quad_over_support(k, K),
        "K'": quad_over_support(k, Kp),
        "xK'": quad_over_support(k, lambda x: x * Kp(x)),
        "x2K'": quad_over_support(k, lambda x: x * x * Kp(x)),
        "x4K": quad_over_support(k, lambda x: x ** 4 * K(x)),
        "x4|K'|": quad_over_support(k, lambda x: x ** 4 * abs(Kp(x))),
    }


MOMENT_TARGETS = {"K": 1.0, "K'": 0.0, "xK'": -1.0, "x2K'": 0.0}


def check_moments(k: Kernel, tol: float = 1e-6) -> dict:
    """Return ``{name: (value, ok)}`` for the four equality conditions plus finiteness."""
    vals = moment_integrals(k)
    out = {}
    for key, v in vals.items():
        if key in MOMENT_TARGETS:
            out[key] = (v, abs(v - MOMENT_TARGETS[key]) <= tol)
        else:
            out[key] = (v, math.isfinite(v))
    return out
