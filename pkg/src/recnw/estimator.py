"""Recursive Nadaraya-Watson estimator of f and three estimators of f'.

The state holds six running means per grid point x, updated with bandwidth
h_n = n**-alpha where n is the state's own sample count::

    H  = mean(Y_k / h_k   * K((x - X_k) / h_k))
    G  = mean(1   / h_k   * K((x - X_k) / h_k))
    Hp = mean(Y_k / h_k^2 * K'((x - X_k) / h_k))
    Gp = mean(1   / h_k^2 * K'((x - X_k) / h_k))
    C  = mean(Y_k / (g(X_k) h_k)   * K(...))      # only with a known density g
    Cp = mean(Y_k / (g(X_k) h_k^2) * K'(...))

Each update is ``A <- (n-1)/n * A + term/n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _backend
from .kernels import Kernel, get_kernel

DEN_EPS = 1e-8
SNAPSHOT_VERSION = 1
ACCUMULATORS = ("H", "G", "Hp", "Gp", "C", "Cp")


class UnsupportedPointError(ValueError):
    """The estimated design density at a grid point is below ``DEN_EPS``."""

    def __init__(self, x, g_value):
        super().__init__(f"unsupported point x={x!r}: density estimate {g_value!r} < {DEN_EPS}")
        self.x = x
        self.g_value = g_value


class InvalidRecordError(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthSchedule:
    """h_k = k**-alpha with 0 < alpha < 1."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    def h(self, k):
        return np.asarray(k, dtype=float) ** -self.alpha if np.ndim(k) else float(k) ** -self.alpha


@dataclass(frozen=True)
class DensityModel:
    """Known design density g and its derivative (vectorised callables)."""

    g: Callable
    g_prime: Callable
    name: str = "custom"


def _unif_g(x):
    x = np.asarray(x, dtype=float)
    out = np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def _unif_gp(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    return float(out) if out.ndim == 0 else out


UNIFORM01 = DensityModel(_unif_g, _unif_gp, name="uniform")


@dataclass(frozen=True)
class SampleRecord:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidRecordError(f"non-finite record ({self.x!r}, {self.y!r})")


def _check_grid(grid) -> np.ndarray:
    g = np.array(grid, dtype=np.float64).ravel()
    if g.size == 0:
        raise ValueError("grid must be nonempty")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid entries must be finite")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise ValueError("grid must be strictly increasing")
    return g


class EstimatorState:
    """Per-grid-point accumulators of the recursive estimators.

    Parameters
    ----------
    grid : array_like
        Strictly increasing evaluation points.
    kernel : Kernel or str
    schedule : BandwidthSchedule or float
        A bare float is taken as alpha.
    density : DensityModel, optional
        Allocates the ``C``/``Cp`` accumulators used by the known-density
        estimator.
    """

    def __init__(self, grid, kernel, schedule, density: Optional[DensityModel] = None):
        self.grid = _check_grid(grid)
        self.kernel = get_kernel(kernel) if isinstance(kernel, str) else kernel
        self.schedule = schedule if isinstance(schedule, BandwidthSchedule) else BandwidthSchedule(schedule)
        self.density = density
        self.n = 0
        m = self.grid.size
        self.H = np.zeros(m)
        self.G = np.zeros(m)
        self.Hp = np.zeros(m)
        self.Gp = np.zeros(m)
        if density is not None:
            self.C = np.zeros(m)
            self.Cp = np.zeros(m)
        else:
            self.C = None
            self.Cp = None

    @property
    def alpha(self) -> float:
        return self.schedule.alpha

    def __len__(self):
        return self.grid.size

    def __repr__(self):
        return (f"EstimatorState(m={self.grid.size}, n={self.n}, kernel={self.kernel.name!r}, "
                f"alpha={self.alpha}, density={'yes' if self.density else 'no'})")

    # -- updates ----------------------------------------------------------

    def _inv_g(self, xs):
        if self.density is None:
            return None
        gx = np.asarray(self.density.g(xs), dtype=float)
        bad = ~(gx > 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InvalidRecordError(f"design density g({xs[i]!r}) = {gx[i]!r} is not positive")
        return 1.0 / gx

    def update(self, x, y=None):
        """Add one observation; accepts a :class:`SampleRecord` or ``(x, y)``."""
        if y is None:
            x, y = x.x, x.y
        return self.update_many([x], [y])

    def update_many(self, xs, ys, *, force_python=False):
        """Stream observations in the given order.

        The batch is validated before any accumulator is touched, so a
        rejected batch leaves the state unchanged.
        """
        xs = np.ascontiguousarray(xs, dtype=np.float64).ravel()
        ys = np.ascontiguousarray(ys, dtype=np.float64).ravel()
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have the same length")
        if xs.size == 0:
            return self
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InvalidRecordError("non-finite observation in batch")
        inv_g = self._inv_g(xs)
        self.n = _backend.stream_update(
            self.grid, xs, ys, inv_g, self.n, self.alpha, self.kernel,
            self.H, self.G, self.Hp, self.Gp, self.C, self.Cp,
            force_python=force_python,
        )
        return self

    # -- estimates --------------------------------------------------------

    def _require_data(self):
        if self.n < 1:
            raise ValueError("no observations yet")

    def _guard(self, i):
        self._require_data()
        if not self.G[i] >= DEN_EPS:
            raise UnsupportedPointError(float(self.grid[i]), float(self.G[i]))

    def estimate_f(self, i: int) -> float:
        self._guard(i)
        return float(self.H[i] / self.G[i])

    def estimate_f_prime_nw(self, i: int) -> float:
        self._guard(i)
        g = self.G[i]
        return float(self.Hp[i] / g - self.H[i] * self.Gp[i] / (g * g))

    def estimate_f_prime_tilde(self, i: int, density: Optional[DensityModel] = None) -> float:
        self._require_data()
        density = density or self.density
        if density is None:
            raise ValueError("the known-density estimator needs a DensityModel")
        x = self.grid[i]
        g = float(density.g(x))
        if not g > 0:
            raise UnsupportedPointError(float(x), g)
        return float(self.Hp[i] / g - self.H[i] * float(density.g_prime(x)) / (g * g))

    def estimate_f_prime_check(self, i: int) -> float:
        self._require_data()
        if self.Cp is None:
            raise ValueError("state was built without a DensityModel")
        return float(self.Cp[i])

    # Vectorised versions: NaN where the denominator guard trips.

    def f_hat(self) -> np.ndarray:
        self._require_data()
        ok = self.G >= DEN_EPS
        out = np.full(self.grid.size, np.nan)
        out[ok] = self.H[ok] / self.G[ok]
        return out

    def f_prime_nw(self) -> np.ndarray:
        self._require_data()
        ok = self.G >= DEN_EPS
        out = np.full(self.grid.size, np.nan)
        g = self.G[ok]
        out[ok] = self.Hp[ok] / g - self.H[ok] * self.Gp[ok] / (g * g)
        return out

    def f_prime_tilde(self, density: Optional[DensityModel] = None) -> np.ndarray:
        self._require_data()
        density = density or self.density
        if density is None:
            raise ValueError("the known-density estimator needs a DensityModel")
        g = np.asarray(density.g(self.grid), dtype=float)
        gp = np.asarray(density.g_prime(self.grid), dtype=float)
        out = np.full(self.grid.size, np.nan)
        ok = g > 0
        out[ok] = self.Hp[ok] / g[ok] - self.H[ok] * gp[ok] / (g[ok] * g[ok])
        return out

    def f_prime_check(self) -> np.ndarray:
        self._require_data()
        if self.Cp is None:
            raise ValueError("state was built without a DensityModel")
        return self.Cp.copy()

    # -- snapshots --------------------------------------------------------

    def to_dict(self) -> dict:
        if self.kernel.code is None:
            raise ValueError("custom-kernel states cannot be snapshotted")
        d = {
            "version": SNAPSHOT_VERSION,
            "kernel": self.kernel.name,
            "alpha": self.alpha,
            "n": self.n,
            "grid": self.grid.tolist(),
            "density": self.density.name if self.density is not None else None,
        }
        for name in ACCUMULATORS:
            arr = getattr(self, name)
            d[name] = arr.tolist() if arr is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict, density: Optional[DensityModel] = None) -> "EstimatorState":
        if d.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {d.get('version')!r}")
        if d.get("C") is not None and density is None:
            if d.get("density") == "uniform":
                density = UNIFORM01
            else:
                raise ValueError("snapshot carries density accumulators; pass the DensityModel")
        st = cls(d["grid"], d["kernel"], BandwidthSchedule(d["alpha"]),
                 density if d.get("C") is not None else None)
        st.n = int(d["n"])
        for name in ACCUMULATORS:
            if d.get(name) is not None:
                arr = np.array(d[name], dtype=np.float64)
                if arr.shape != st.grid.shape:
                    raise ValueError(f"snapshot field {name} has wrong length")
                setattr(st, name, arr)
        return st

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path, density: Optional[DensityModel] = None) -> "EstimatorState":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), density)


# Functional surface ---------------------------------------------------------

def state_new(grid, kernel, schedule, density=None) -> EstimatorState:
    return EstimatorState(grid, kernel, schedule, density)


def state_update(s: EstimatorState, rec: SampleRecord) -> EstimatorState:
    return s.update(rec)


def estimate_f(s: EstimatorState, i: int) -> float:
    return s.estimate_f(i)


def estimate_f_prime_nw(s: EstimatorState, i: int) -> float:
    return s.estimate_f_prime_nw(i)


def estimate_f_prime_tilde(s: EstimatorState, i: int, density: DensityModel) -> float:
    return s.estimate_f_prime_tilde(i, density)


def estimate_f_prime_check(s: EstimatorState, i: int) -> float:
    return s.estimate_f_prime_check(i)


def batch_oracle(records: Sequence, kernel: Kernel, schedule, density: Optional[DensityModel],
                 x: float) -> dict:
    """Direct (non-recursive) sums of the six accumulators at one point.

    Scalar Python arithmetic with ``math.fsum``; shares no code with the
    streaming path. ``C``/``Cp`` are None when ``density`` is None.
    """
    if not records:
        raise ValueError("records must be nonempty")
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    alpha = schedule.alpha if isinstance(schedule, BandwidthSchedule) else float(schedule)
    terms = {name: [] for name in ACCUMULATORS}
    for k, rec in enumerate(records, start=1):
        xk, yk = (rec.x, rec.y) if isinstance(rec, SampleRecord) else rec
        if not (math.isfinite(xk) and math.isfinite(yk)):
            raise InvalidRecordError(f"non-finite record ({xk!r}, {yk!r})")
        h = k ** -alpha
        u = (x - xk) / h
        kv = float(kernel.pdf(u))
        kd = float(kernel.deriv(u))
        terms["H"].append(yk * kv / h)
        terms["G"].append(kv / h)
        terms["Hp"].append(yk * kd / h ** 2)
        terms["Gp"].append(kd / h ** 2)
        if density is not None:
            gx = float(density.g(xk))
            if not gx > 0:
                raise InvalidRecordError(f"design density g({xk!r}) = {gx!r} is not positive")
            terms["C"].append(yk * kv / (gx * h))
            terms["Cp"].append(yk * kd / (gx * h ** 2))
    n = len(records)
    out = {}
    for name in ACCUMULATORS:
        out[name] = math.fsum(terms[name]) / n if (density is not None or name in ("H", "G", "Hp", "Gp")) else None
    return out


def iter_records(xs: Iterable[float], ys: Iterable[float]):
    for x, y in zip(xs, ys):
        yield SampleRecord(float(x), float(y))
