"""Monte-Carlo harness for the regression model Y = f(X) + sigma*eps.

X ~ U(0, 1), eps ~ N(0, 1) and f(x) = sin(2 pi x^3)^3. The experiments
check pointwise consistency (MSE shrinking with n) and the asymptotic
normality of sqrt(n h_n^3) * (estimate - f'(x)).
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats

from .estimator import UNIFORM01, BandwidthSchedule, EstimatorState
from .kernels import get_kernel


ESTIMATORS = ("nw", "tilde", "check")
DEFAULT_POINTS = (0.4, 0.9)
SWEEP_GRID = np.linspace(0.02, 0.98, 33)
# asymptotic 1% critical value of A^2 for a fully specified null
AD_CRIT_1PCT = 3.857
TSV_COLUMNS = ("estimator", "x", "n", "alpha", "kernel", "emp_mean", "emp_var",
               "theo_var", "ad_stat", "guard_failures")


def true_f(x):
    x = np.asarray(x, dtype=float)
    out = np.sin(2.0 * np.pi * x ** 3) ** 3
    return float(out) if out.ndim == 0 else out


def true_f_prime(x):
    x = np.asarray(x, dtype=float)
    t = 2.0 * np.pi * x ** 3
    out = 18.0 * np.pi * x ** 2 * np.cos(t) * np.sin(t) ** 2
    return float(out) if out.ndim == 0 else out


def simulate_arrays(n: int, rng: np.random.Generator, sigma: float = 1.0):
    x = rng.uniform(0.0, 1.0, n)
    z = rng.standard_normal(n)
    return x, true_f(x) + sigma * z


def simulate_dataset(n: int, seed: int, sigma: float = 1.0):
    """Return ``(x, y)`` arrays of length n; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return simulate_arrays(n, np.random.default_rng(seed), sigma)


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Generator for replicate ``r``; depends only on ``(seed, r)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(r,))))


def normalizing_factor(n, alpha):
    """sqrt(n * h_n^3) with h_n = n**-alpha, i.e. n**((1 - 3 alpha) / 2)."""
    return n ** ((1.0 - 3.0 * alpha) / 2.0)


def theoretical_clt_variance(kind: str, x: float, alpha: float, kernel, sigma: float = 1.0) -> float:
    """Limit variance of the normalized error under the uniform design."""
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    g = float(UNIFORM01.g(x))
    if not g > 0:
        raise ValueError(f"design density vanishes at x={x!r}")
    base = kernel.xi_squared / ((1.0 + 3.0 * alpha) * g)
    if kind == "nw":
        return base * sigma ** 2
    if kind in ("tilde", "check"):
        return base * (true_f(x) ** 2 + sigma ** 2)
    raise ValueError(f"unknown estimator {kind!r}")


def anderson_darling(sample, cdf) -> float:
    """A^2 statistic of ``sample`` against a fully specified continuous CDF."""
    z = np.sort(np.asarray(sample, dtype=float))
    n = z.size
    F = np.clip(cdf(z), 1e-300, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (np.log(F) + np.log1p(-F[::-1]))) / n)


def ad_pvalue(a2: float) -> float:
    """Upper-tail p-value from the asymptotic A^2 law (Marsaglia & Marsaglia 2004)."""
    z = a2
    if z <= 0:
        return 1.0
    if z < 2.0:
        cdf = (math.exp(-1.2337141 / z) / math.sqrt(z)
               * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z))
    else:
        cdf = math.exp(-math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z))
    return min(1.0, max(0.0, 1.0 - cdf))


@dataclass
class SimConfig:
    n: int = 10_000
    N: int = 2_000
    seed: int = 0
    alpha: float = 0.32
    kernel: str = "gaussian"
    points: Sequence[float] = DEFAULT_POINTS
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        BandwidthSchedule(self.alpha)
        self.points = tuple(float(p) for p in self.points)


@dataclass
class CltCell:
    estimator: str
    x: float
    errors: np.ndarray = field(repr=False)
    emp_mean: float
    emp_var: float
    theo_var: float
    ad_stat: float
    ad_pvalue: float
    guard_failures: int
    valid: bool

    @property
    def normal_ok(self) -> bool:
        return self.ad_stat <= AD_CRIT_1PCT


@dataclass
class CltResult:
    config: SimConfig
    cells: List[CltCell]

    def cell(self, estimator: str, x: float) -> CltCell:
        for c in self.cells:
            if c.estimator == estimator and math.isclose(c.x, x):
                return c
        raise KeyError((estimator, x))

    def write_tsv(self, fh):
        cfg = self.config
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(TSV_COLUMNS)
        for c in self.cells:
            w.writerow([c.estimator, _fmt(c.x), cfg.n, _fmt(cfg.alpha), cfg.kernel,
                        _fmt(c.emp_mean), _fmt(c.emp_var), _fmt(c.theo_var),
                        _fmt(c.ad_stat), c.guard_failures])

    def to_tsv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_tsv(fh)

    def histogram(self, estimator: str, x: float, bins: int = 40):
        c = self.cell(estimator, x)
        e = c.errors[np.isfinite(c.errors)]
        counts, edges = np.histogram(e, bins=bins)
        return edges[:-1], edges[1:], counts


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_histogram_tsv(path, left, right, counts):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for a, b, c in zip(left, right, counts):
            w.writerow([_fmt(a), _fmt(b), int(c)])


def _one_replicate(args):
    n, seed, r, alpha, kernel_name, points, sigma = args
    x, y = simulate_arrays(n, replicate_rng(seed, r), sigma)
    st = EstimatorState(points, kernel_name, alpha, UNIFORM01).update_many(x, y)
    return np.vstack([st.f_prime_nw(), st.f_prime_tilde(), st.f_prime_check()])


def run_clt_experiment(cfg: SimConfig, workers: int = 1) -> CltResult:
    """N independent replicates of n samples each, normalized errors per cell.

    Replicate r draws from :func:`replicate_rng` ``(cfg.seed, r)`` so the
    result does not depend on ``workers``.
    """
    if not (0.2 < cfg.alpha < 1.0 / 3.0):
        warnings.warn(f"alpha={cfg.alpha} is outside (1/5, 1/3); the normal limit is not guaranteed",
                      RuntimeWarning, stacklevel=2)
    kernel = get_kernel(cfg.kernel)
    jobs = [(cfg.n, cfg.seed, r, cfg.alpha, cfg.kernel, cfg.points, cfg.sigma) for r in range(cfg.N)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reps = list(ex.map(_one_replicate, jobs, chunksize=max(1, cfg.N // (4 * workers))))
    else:
        reps = [_one_replicate(j) for j in jobs]
    est = np.stack(reps)  # (N, 3, m)
    fp = true_f_prime(np.asarray(cfg.points))
    scale = normalizing_factor(cfg.n, cfg.alpha)
    cells = []
    for e_i, name in enumerate(ESTIMATORS):
        for p_i, x in enumerate(cfg.points):
            raw = est[:, e_i, p_i]
            fails = int(np.sum(~np.isfinite(raw)))
            errs = scale * (raw - fp[p_i])
            good = errs[np.isfinite(errs)]
            theo = theoretical_clt_variance(name, x, cfg.alpha, kernel, cfg.sigma)
            if good.size >= 2:
                a2 = anderson_darling(good, stats.norm(0.0, math.sqrt(theo)).cdf)
                mean, var = float(good.mean()), float(good.var(ddof=1))
            else:
                a2, mean, var = math.nan, math.nan, math.nan
            cells.append(CltCell(name, x, errs, mean, var, theo, a2, ad_pvalue(a2),
                                 fails, valid=fails <= 0.01 * cfg.N))
    return CltResult(cfg, cells)


@dataclass
class SweepRow:
    n: int
    mse: Dict[str, float]
    guard_failures: int


def run_convergence_sweep(n_list: Sequence[int], seeds: Sequence[int], alpha: float,
                          kernel="gaussian", grid=SWEEP_GRID, sigma: float = 1.0) -> List[SweepRow]:
    """Grid-averaged squared error of each derivative estimator vs n, averaged over seeds.

    One dataset of ``max(n_list)`` samples is drawn per seed and streamed
    once; the state is read off at every n in ``n_list``.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    grid = np.asarray(grid, dtype=float)
    fp = true_f_prime(grid)
    acc = {n: {k: [] for k in ESTIMATORS} for n in n_list}
    fails = {n: 0 for n in n_list}
    for seed in seeds:
        x, y = simulate_dataset(n_list[-1], seed, sigma)
        st = EstimatorState(grid, kernel, alpha, UNIFORM01)
        done = 0
        for n in n_list:
            st.update_many(x[done:n], y[done:n])
            done = n
            for name, est in zip(ESTIMATORS, (st.f_prime_nw(), st.f_prime_tilde(), st.f_prime_check())):
                ok = np.isfinite(est)
                if name == "nw":
                    fails[n] += int(np.sum(~ok))
                acc[n][name].append(float(np.mean((est[ok] - fp[ok]) ** 2)) if ok.any() else math.nan)
    return [SweepRow(n, {k: float(np.nanmean(v)) for k, v in acc[n].items()}, fails[n]) for n in n_list]
