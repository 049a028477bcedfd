"""Invariant suites shared by the ``selftest`` command and the test-suite."""

from __future__ import annotations

from typing import List, NamedTuple

import numpy as np

from .estimator import ACCUMULATORS, UNIFORM01, BandwidthSchedule, EstimatorState, batch_oracle
from .kernels import EPANECHNIKOV, GAUSSIAN, check_moments, quad_over_support
from .simulation import true_f

STREAM_RTOL = 1e-12


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


def streaming_vs_batch(n_configs: int = 100, seed: int = 0, max_n: int = 1000) -> Check:
    """Random configurations; every accumulator against the direct-sum oracle."""
    rng = np.random.default_rng(seed)
    worst, where = 0.0, None
    for c in range(n_configs):
        n = int(rng.integers(1, max_n + 1))
        kernel = (GAUSSIAN, EPANECHNIKOV)[c % 2]
        alpha = (0.21, 0.32)[(c // 2) % 2]
        x = rng.uniform(0.0, 1.0, n)
        y = np.sin(6.0 * x) + rng.standard_normal(n)
        grid = np.sort(rng.uniform(0.02, 0.98, int(rng.integers(1, 6))))
        st = EstimatorState(grid, kernel, alpha, UNIFORM01).update_many(x, y)
        recs = list(zip(x.tolist(), y.tolist()))
        sched = BandwidthSchedule(alpha)
        for i, gx in enumerate(grid):
            ref = batch_oracle(recs, kernel, sched, UNIFORM01, float(gx))
            for name in ACCUMULATORS:
                r = _rel(float(getattr(st, name)[i]), ref[name])
                if r > worst:
                    worst, where = r, (c, name, float(gx))
    return Check("streaming_vs_batch", worst <= STREAM_RTOL,
                 f"max relative error {worst:.3g} (config, field, x) = {where}")


def kernel_constants() -> List[Check]:
    out = []
    g = GAUSSIAN.xi_squared
    out.append(Check("xi2_gaussian", abs(g - 0.1410474) <= 1e-6, f"{g!r}"))
    e = EPANECHNIKOV.xi_squared
    out.append(Check("xi2_epanechnikov", e == 1.5, f"{e!r}"))
    for k in (GAUSSIAN, EPANECHNIKOV):
        for key, (val, ok) in check_moments(k, tol=1e-6).items():
            out.append(Check(f"moment_{k.name}_{key}", ok, f"{val!r}"))
        q = quad_over_support(k, lambda u, k=k: float(k.deriv(u)) ** 2)
        out.append(Check(f"xi2_quadrature_{k.name}", abs(q - k.xi_squared) <= 1e-8, f"{q!r}"))
    return out


def ground_truth() -> List[Check]:
    out = []
    for x, target in ((0.4, 0.0036), (0.9, 0.9489)):
        f2 = true_f(x) ** 2
        out.append(Check(f"f_squared_{x}", abs(f2 - target) <= 2e-4, f"{f2:.6f} vs {target}"))
    return out


def run_all() -> List[Check]:
    return [streaming_vs_batch()] + kernel_constants() + ground_truth()


def summarize(checks) -> str:
    return "\n".join(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}" for c in checks)


def all_ok(checks) -> bool:
    return all(c.ok for c in checks)
