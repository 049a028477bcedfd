"""Leave-one-out cross-validation of the bandwidth exponent alpha.

Leaving record k out of a recursive estimator is order-sensitive. Here the
record is deleted, the others keep their arrival order and are re-indexed
1..n-1 for the bandwidth schedule. The estimator is then evaluated at X_k
itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from . import _backend
from .estimator import DEN_EPS, BandwidthSchedule
from .kernels import get_kernel

DEFAULT_ALPHAS = tuple(round(0.20 + 0.02 * i, 2) for i in range(11))
MIN_SAMPLES = 50
MAX_LOO_POINTS = 500
MAX_SKIP_FRACTION = 0.10
ALPHA_MAX = 1.0 / 3.0


def alpha_grid(values: Optional[Sequence[float]] = None) -> tuple:
    vals = tuple(float(a) for a in (DEFAULT_ALPHAS if values is None else values))
    if not vals:
        raise ValueError("alpha grid must be nonempty")
    for a in vals:
        BandwidthSchedule(a)
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("alpha grid must be strictly increasing")
    return vals


@dataclass
class CvReport:
    mode: str
    kernel: str
    n: int
    n_eval: int
    scores: Dict[float, float]
    skipped: Dict[float, int]
    invalid: list
    selected: float
    constrained: bool
    clipped: bool = False
    eval_seed: Optional[int] = field(default=None)

    def to_json(self) -> str:
        d = asdict(self)
        d["scores"] = [{"alpha": a, "score": s, "skipped": self.skipped[a],
                        "valid": a not in self.invalid} for a, s in self.scores.items()]
        del d["skipped"]
        return json.dumps(d, indent=2, allow_nan=True)


def loo_accumulators(x, y, alpha, kernel, eval_idx, force_python=False):
    """(H, G, Hp, Gp) at X_k with record k removed, one row per k."""
    return _backend.loo_sums(x, y, alpha, kernel, eval_idx, force_python=force_python)


def _eval_indices(n, max_points, seed):
    if n <= max_points:
        return np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=max_points, replace=False)).astype(np.int64)


def _select(scores, invalid, constrain):
    ok = [a for a in scores if a not in invalid and math.isfinite(scores[a])]
    allowed = [a for a in ok if a < ALPHA_MAX] if constrain else ok
    if not allowed:
        raise ValueError("no admissible alpha in the grid")
    best = min(allowed, key=lambda a: (scores[a], a))
    free_best = min(ok, key=lambda a: (scores[a], a))
    return best, constrain and free_best != best


def _run_cv(mode, x, y, kernel, alphas, target, constrain, max_points, seed, force_python):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"cross-validation needs n >= {MIN_SAMPLES}, got {n}")
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    alphas = alpha_grid(alphas)
    idx = _eval_indices(n, max_points, seed)
    scores, skipped, invalid = {}, {}, []
    for a in alphas:
        H, G, Hp, Gp = loo_accumulators(x, y, a, kernel, idx, force_python).T
        ok = G >= DEN_EPS
        if mode == "oracle":
            est = Hp[ok] / G[ok] - H[ok] * Gp[ok] / G[ok] ** 2
        else:
            est = H[ok] / G[ok]
        resid = est - target[idx[ok]]
        skipped[a] = int(idx.size - ok.sum())
        scores[a] = float(np.mean(resid ** 2)) if ok.any() else math.nan
        if skipped[a] > MAX_SKIP_FRACTION * idx.size:
            invalid.append(a)
    selected, clipped = _select(scores, invalid, constrain)
    return CvReport(mode, kernel.name, n, int(idx.size), scores, skipped, invalid,
                    selected, constrain, clipped, seed if n > max_points else None)


def cv_oracle(x, y, kernel, alphas=None, true_f_prime: Callable = None, *,
              constrain: bool = True, max_points: int = MAX_LOO_POINTS, seed: int = 0,
              force_python: bool = False) -> CvReport:
    """Score alpha by mean squared LOO error of f' against a known derivative."""
    if true_f_prime is None:
        raise ValueError("cv_oracle needs the true derivative")
    target = np.asarray(true_f_prime(np.asarray(x, dtype=float)), dtype=float)
    return _run_cv("oracle", x, y, kernel, alphas, target, constrain, max_points, seed, force_python)


def cv_predictive(x, y, kernel, alphas=None, *, constrain: bool = True,
                  max_points: int = MAX_LOO_POINTS, seed: int = 0,
                  force_python: bool = False) -> CvReport:
    """Score alpha by LOO prediction error of the level estimate; f' not needed."""
    target = np.asarray(y, dtype=float)
    return _run_cv("predictive", x, y, kernel, alphas, target, constrain, max_points, seed, force_python)
