"""Compiled extension vs numpy fallback on the two hot loops.

    python benchmarks/bench_core.py [--n 20000] [--grid 33] [--repeat 3]
"""

import argparse
import time

import numpy as np

from recnw import _backend
from recnw.bandwidth import _eval_indices
from recnw.estimator import UNIFORM01, EstimatorState
from recnw.kernels import EPANECHNIKOV, GAUSSIAN


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--grid", type=int, default=33)
    ap.add_argument("--loo-n", type=int, default=10_000)
    ap.add_argument("--loo-points", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if not _backend.has_compiled():
        print("compiled extension not built; only the fallback can run")
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, args.n)
    y = np.sin(6 * x) + rng.standard_normal(args.n)
    grid = np.linspace(0.02, 0.98, args.grid)
    idx = _eval_indices(args.loo_n, args.loo_points, 0)

    print(f"{'op':<28}{'kernel':<14}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for k in (GAUSSIAN, EPANECHNIKOV):
        rows = [
            (f"stream_update n={args.n} m={args.grid}",
             lambda fp: EstimatorState(grid, k, 0.32, UNIFORM01).update_many(x, y, force_python=fp)),
            (f"loo_sums n={args.loo_n} k={idx.size}",
             lambda fp: _backend.loo_sums(x[:args.loo_n], y[:args.loo_n], 0.32, k, idx, force_python=fp)),
        ]
        for name, fn in rows:
            tp = best_of(lambda: fn(True), args.repeat)
            if _backend.has_compiled():
                tc = best_of(lambda: fn(False), args.repeat)
                print(f"{name:<28}{k.name:<14}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
            else:
                print(f"{name:<28}{k.name:<14}{'-':>12}{tp:>12.4f}{'-':>10}")


if __name__ == "__main__":
    main()
