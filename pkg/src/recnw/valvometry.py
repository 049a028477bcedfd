"""Valve-gape sensor data: CSV ingestion, per-day velocity, heatmap export.

Input rows are ``timestamp,animal_id,distance_mm``. Each (day, animal)
partition is streamed in arrival order into a fresh recursive estimator
on a grid of time-bin centres, with time expressed as a fraction of the
UTC (or offset) day. The derivative estimate is converted to mm/s.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .estimator import EstimatorState

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
COLUMNS = ("timestamp", "animal_id", "distance_mm")
DEFAULT_BINS = 288
MIN_DAY_RECORDS = 100
MAX_MALFORMED_FRACTION = 0.5
CLASS_NAMES = ("low", "mid", "high")


class DataError(Exception):
    """Input data cannot be used (missing columns, mostly malformed, too few rows)."""


@dataclass(frozen=True)
class GapeRecord:
    timestamp: float
    animal_id: int
    distance_mm: float


@dataclass
class Partition:
    """Columnar records of one (day, animal), in file order."""

    day: int
    animal_id: int
    timestamp: np.ndarray
    distance_mm: np.ndarray
    offset_seconds: float = 0.0

    def __len__(self):
        return self.timestamp.size

    @property
    def day_start(self) -> float:
        """Start of the partition's day on the (unshifted) timestamp clock."""
        return self.day * SECONDS_PER_DAY - self.offset_seconds

    def day_fraction(self) -> np.ndarray:
        return (self.timestamp - self.day_start) / SECONDS_PER_DAY

    def records(self) -> Iterable[GapeRecord]:
        for t, d in zip(self.timestamp, self.distance_mm):
            yield GapeRecord(float(t), self.animal_id, float(d))


@dataclass
class IngestResult:
    partitions: Dict[Tuple[int, int], Partition]
    n_rows: int
    n_good: int
    n_malformed: int
    time_base: str = "epoch"
    tz_offset_hours: float = 0.0

    @property
    def n_records(self) -> int:
        return self.n_good


def day_label(day: int) -> str:
    return (dt.date(1970, 1, 1) + dt.timedelta(days=int(day))).isoformat()


def _read_header_options(path) -> Tuple[dict, int]:
    """Parse leading ``# key=value`` lines; return options and lines consumed."""
    opts, skip = {}, 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            skip += 1
            for part in line[1:].split(","):
                if "=" in part:
                    k, v = part.split("=", 1)
                    opts[k.strip()] = v.strip()
    return opts, skip


def _exact_float(col: pd.Series) -> np.ndarray:
    # to_numeric is only used as a validity mask; it is not correctly rounded.
    ok = pd.to_numeric(col, errors="coerce").notna().to_numpy()
    out = np.full(col.size, np.nan)
    if ok.any():
        out[ok] = col.to_numpy(dtype=object)[ok].astype(float)
    return out


def _parse_timestamps(col: pd.Series) -> np.ndarray:
    t = _exact_float(col)
    iso = np.isnan(t) & col.notna().to_numpy()
    if iso.any():
        ts = pd.to_datetime(col[iso], utc=True, errors="coerce", format="ISO8601")
        ns = ts.to_numpy(dtype="datetime64[ns]")
        sec = ns.astype("int64") / 1e9
        sec[pd.isna(ts).to_numpy()] = np.nan
        t[iso] = sec
    return t


def ingest_csv(path, *, tz_offset_hours: float = 0.0, animal_range=(1, 16),
               time_base: Optional[str] = None, date: Optional[str] = None) -> IngestResult:
    """Parse, validate and partition a gape CSV by (day, animal).

    ``time_base`` is ``"epoch"`` (default) or ``"midnight"``; the latter
    means timestamps are seconds since midnight of ``date`` (ISO date).
    Both may also be declared in leading ``# time_base=..., date=...``
    comment lines. Malformed rows are skipped and counted.
    """
    opts, skip = _read_header_options(path)
    time_base = time_base or opts.get("time_base", "epoch")
    date = date or opts.get("date")
    if time_base not in ("epoch", "midnight"):
        raise DataError(f"unknown time_base {time_base!r}")
    df = pd.read_csv(path, dtype=str, skiprows=skip, skipinitialspace=True,
                     keep_default_na=False, encoding="utf-8")
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"missing columns: {missing}")
    n_rows = len(df)
    if n_rows == 0:
        raise DataError("no data rows")

    t = _parse_timestamps(df["timestamp"])
    d = _exact_float(df["distance_mm"])
    a = _exact_float(df["animal_id"])
    lo, hi = animal_range
    good = (np.isfinite(t) & np.isfinite(d) & (d >= 0) & np.isfinite(a)
            & (a == np.round(a)) & (a >= lo) & (a <= hi))
    if time_base == "midnight":
        if date is None:
            raise DataError("time_base=midnight requires a date")
        good &= (t >= 0) & (t < SECONDS_PER_DAY)
        base = dt.datetime.fromisoformat(date).replace(tzinfo=dt.timezone.utc).timestamp()
        t = t + base - tz_offset_hours * 3600.0
    n_good = int(good.sum())
    n_bad = n_rows - n_good
    if n_bad > MAX_MALFORMED_FRACTION * n_rows:
        raise DataError(f"{n_bad} of {n_rows} rows malformed; wrong file?")
    if n_bad:
        log.warning("skipped %d malformed rows of %d", n_bad, n_rows)

    t, d, a = t[good], d[good], a[good].astype(np.int64)
    local = t + tz_offset_hours * 3600.0
    day = np.floor(local / SECONDS_PER_DAY).astype(np.int64)
    parts = {}
    key = day * 1000 + a
    order = np.argsort(key, kind="stable")  # stable keeps arrival order within a partition
    ks, starts = np.unique(key[order], return_index=True)
    bounds = list(starts[1:]) + [order.size]
    for k, s, e in zip(ks, starts, bounds):
        sel = order[s:e]
        dd, aa = int(k // 1000), int(k % 1000)
        parts[(dd, aa)] = Partition(dd, aa, t[sel], d[sel], tz_offset_hours * 3600.0)
    return IngestResult(parts, n_rows, n_good, n_bad, time_base, tz_offset_hours)


def write_csv(path, records: Sequence[GapeRecord]):
    """Write records with 17 significant digits, so re-parsing is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow([format(r.timestamp, ".17g"), r.animal_id, format(r.distance_mm, ".17g")])


@dataclass
class DayVelocityGrid:
    day: int
    animal_id: int
    centers: np.ndarray
    velocity: np.ndarray  # signed, mm/s; NaN where missing
    n_records: int
    classes: Optional[np.ndarray] = None
    state: Optional[EstimatorState] = field(default=None, repr=False)

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.velocity)

    def to_tsv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["bin_center_frac", "velocity_mm_per_s", "class", "missing_flag"])
            for i, c in enumerate(self.centers):
                miss = not math.isfinite(self.velocity[i])
                cls = "" if self.classes is None or miss else self.classes[i]
                w.writerow([format(c, ".17g"), "" if miss else format(self.velocity[i], ".17g"),
                            cls, int(miss)])


def bin_centers(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


def estimate_day(part: Partition, alpha: float = 0.32, kernel="gaussian", bins: int = DEFAULT_BINS,
                 state: Optional[EstimatorState] = None) -> DayVelocityGrid:
    """Velocity (mm/s) on ``bins`` time bins for one (day, animal).

    Passing a previously saved ``state`` continues its recursion with the
    new records (resume after a partial-day file).
    """
    if state is None and len(part) < MIN_DAY_RECORDS:
        raise DataError(f"day {day_label(part.day)} animal {part.animal_id}: "
                        f"{len(part)} records, need >= {MIN_DAY_RECORDS}")
    frac = part.day_fraction()
    if state is None:
        state = EstimatorState(bin_centers(bins), kernel, alpha)
    state.update_many(frac, part.distance_mm)
    vel = state.f_prime_nw() / SECONDS_PER_DAY
    return DayVelocityGrid(part.day, part.animal_id, state.grid.copy(), vel, state.n, state=state)


def assign_terciles(grids: Sequence[DayVelocityGrid]) -> Tuple[float, float]:
    """Label every non-missing cell by the global tercile of |velocity|.

    Ranks are taken over all cells of all grids; returns the two cut values.
    """
    mags = [np.abs(g.velocity[~g.missing]) for g in grids]
    allv = np.concatenate(mags) if mags else np.empty(0)
    N = allv.size
    labels = np.empty(N, dtype=object)
    if N:
        order = np.argsort(allv, kind="stable")
        ranks = np.empty(N, dtype=np.int64)
        ranks[order] = np.arange(N)
        labels[:] = np.asarray(CLASS_NAMES, dtype=object)[(3 * ranks) // N]
    pos = 0
    for g in grids:
        cls = np.full(g.velocity.size, "", dtype=object)
        k = int((~g.missing).sum())
        cls[~g.missing] = labels[pos:pos + k]
        g.classes = cls
        pos += k
    if N == 0:
        return (math.nan, math.nan)
    s = np.sort(allv)
    return float(s[(N - 1) // 3]), float(s[(2 * N - 1) // 3])


def export_heatmap(grids: Sequence[DayVelocityGrid], path_prefix) -> Tuple[str, str]:
    """Write ``<prefix>_velocity.tsv`` (|velocity|) and ``<prefix>_class.tsv``.

    One row per (calendar day, animal) over the full span of days; days
    without data are written as blank rows rather than dropped.
    """
    if not grids:
        raise ValueError("no grids to export")
    if any(g.classes is None for g in grids):
        assign_terciles(grids)
    m = grids[0].centers.size
    by_key = {(g.day, g.animal_id): g for g in grids}
    days = range(min(g.day for g in grids), max(g.day for g in grids) + 1)
    animals = sorted({g.animal_id for g in grids})
    vpath, cpath = f"{path_prefix}_velocity.tsv", f"{path_prefix}_class.tsv"
    header = ["day", "animal_id"] + [format(c, ".17g") for c in grids[0].centers]
    with open(vpath, "w", newline="", encoding="utf-8") as fv, \
            open(cpath, "w", newline="", encoding="utf-8") as fc:
        wv = csv.writer(fv, delimiter="\t", lineterminator="\n")
        wc = csv.writer(fc, delimiter="\t", lineterminator="\n")
        wv.writerow(header)
        wc.writerow(header)
        for day in days:
            for a in animals:
                g = by_key.get((day, a))
                if g is None:
                    blank = [""] * m
                    wv.writerow([day_label(day), a] + blank)
                    wc.writerow([day_label(day), a] + blank)
                    continue
                mag = np.abs(g.velocity)
                wv.writerow([day_label(day), a]
                            + ["" if not math.isfinite(v) else format(v, ".17g") for v in mag])
                wc.writerow([day_label(day), a] + list(g.classes))
    return vpath, cpath


def read_heatmap(path) -> Tuple[List[Tuple[str, int]], np.ndarray]:
    """Inverse of the velocity half of :func:`export_heatmap` (blank -> NaN)."""
    df = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    keys = list(zip(df["day"], df["animal_id"].astype(int)))
    vals = df.iloc[:, 2:].replace("", np.nan).astype(float).to_numpy()
    return keys, vals


def synthetic_day(profile, *, day: int = 15127, animals: int = 16, period: float = 1.6,
                  stagger: float = 0.1) -> pd.DataFrame:
    """One day of readings: animal j sampled every ``period`` s, offset by
    ``stagger * (j - 1)``; ``profile(frac_of_day, animal_id)`` gives mm.
    """
    per = int(round(SECONDS_PER_DAY / period))
    base = day * SECONDS_PER_DAY
    i = np.arange(per)
    cols_t, cols_a, cols_d = [], [], []
    for j in range(1, animals + 1):
        t = i * period + stagger * (j - 1)
        cols_t.append(base + t)
        cols_a.append(np.full(per, j))
        cols_d.append(np.asarray(profile(t / SECONDS_PER_DAY, j), dtype=float) * np.ones(per))
    t = np.concatenate(cols_t)
    order = np.argsort(t, kind="stable")
    return pd.DataFrame({
        "timestamp": t[order],
        "animal_id": np.concatenate(cols_a)[order],
        "distance_mm": np.concatenate(cols_d)[order],
    })


def write_synthetic_csv(path, df: pd.DataFrame):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for t, a, d in zip(df["timestamp"].to_numpy(), df["animal_id"].to_numpy(), df["distance_mm"].to_numpy()):
            w.writerow([repr(float(t)), int(a), repr(float(d))])


def estimate_all(ingest: IngestResult, alpha=0.32, kernel="gaussian", bins=DEFAULT_BINS,
                 state_dir: Optional[str] = None, resume: bool = False) -> List[DayVelocityGrid]:
    """Estimate every partition; optionally save/resume per-partition snapshots."""
    grids = []
    for (day, a), part in sorted(ingest.partitions.items()):
        snap = os.path.join(state_dir, f"state_{day_label(day)}_a{a:02d}.json") if state_dir else None
        state = None
        if resume and snap and os.path.exists(snap):
            state = EstimatorState.load(snap)
        try:
            g = estimate_day(part, alpha, kernel, bins, state=state)
        except DataError as exc:
            log.warning("%s", exc)
            continue
        if snap:
            g.state.save(snap)
        grids.append(g)
    assign_terciles(grids)
    return grids
