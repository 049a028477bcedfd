"""Command-line interface: ``recnw <subcommand> ...``.

Exit codes: 0 ok, 1 data error, 2 usage error, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np
import pandas as pd

from . import _backend, checks
from .bandwidth import cv_oracle, cv_predictive
from .estimator import InvalidRecordError, UnsupportedPointError
from .kernels import BUILTIN
from .simulation import (SimConfig, run_clt_experiment, run_convergence_sweep, simulate_dataset,
                         true_f_prime, write_histogram_tsv)
from .valvometry import (DEFAULT_BINS, DataError, assign_terciles, day_label, estimate_all, export_heatmap,
                         ingest_csv, synthetic_day, write_synthetic_csv)

log = logging.getLogger("recnw")

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_SELFTEST = 0, 1, 2, 3


def _floats(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


def _f17(v):
    return format(float(v), ".17g")


def cmd_simulate(args):
    if args.kind == "gape":
        profiles = {
            "constant": lambda f, j: 2.0 + 0.0 * f,
            "linear": lambda f, j: 0.5 + 3.0 * f,
            "sine": lambda f, j: 2.0 + np.sin(2 * np.pi * 3 * f),
        }
        df = synthetic_day(profiles[args.profile], animals=args.animals)
        write_synthetic_csv(args.out, df)
        return EXIT_OK
    x, y = simulate_dataset(args.n, args.seed, args.sigma)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        w.writerows(zip(map(_f17, x), map(_f17, y)))
    return EXIT_OK


def cmd_clt(args):
    cfg = SimConfig(n=args.n, N=args.N, seed=args.seed, alpha=args.alpha, kernel=args.kernel,
                    points=args.x, sigma=args.sigma)
    res = run_clt_experiment(cfg, workers=args.workers)
    if args.out == "-":
        res.write_tsv(sys.stdout)
    else:
        res.to_tsv(args.out)
    if args.hist_dir:
        os.makedirs(args.hist_dir, exist_ok=True)
        for c in res.cells:
            left, right, counts = res.histogram(c.estimator, c.x, bins=args.bins)
            write_histogram_tsv(os.path.join(args.hist_dir, f"hist_{c.estimator}_{c.x:g}.tsv"),
                                left, right, counts)
    return EXIT_OK


def cmd_sweep(args):
    rows = run_convergence_sweep(args.n_list, range(args.seeds), args.alpha, args.kernel,
                                 sigma=args.sigma)
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, delimiter="\t", lineterminator="\n")
        w.writerow(["n", "mse_nw", "mse_tilde", "mse_check", "guard_failures"])
        for r in rows:
            w.writerow([r.n, _f17(r.mse["nw"]), _f17(r.mse["tilde"]), _f17(r.mse["check"]),
                        r.guard_failures])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _read_xy(path):
    df = pd.read_csv(path, dtype=str)
    if not {"x", "y"} <= set(df.columns):
        raise DataError("input needs columns x,y")
    x = df["x"].to_numpy(dtype=object).astype(float)
    y = df["y"].to_numpy(dtype=object).astype(float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in input")
    return x, y


def cmd_cv(args):
    x, y = _read_xy(args.input)
    kw = dict(constrain=not args.no_constraint, max_points=args.max_points, seed=args.seed)
    if args.mode == "oracle":
        rep = cv_oracle(x, y, args.kernel, args.alphas, true_f_prime, **kw)
    else:
        rep = cv_predictive(x, y, args.kernel, args.alphas, **kw)
    text = rep.to_json()
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _estimate(args, paths):
    if args.state_dir:
        os.makedirs(args.state_dir, exist_ok=True)
    grids = []
    for p in paths:
        ing = ingest_csv(p, tz_offset_hours=args.tz_offset)
        log.info("%s: %d rows, %d malformed, %d partitions", p, ing.n_rows, ing.n_malformed,
                 len(ing.partitions))
        grids.extend(estimate_all(ing, args.alpha, args.kernel, args.bins,
                                  state_dir=args.state_dir, resume=args.resume))
    if not grids:
        raise DataError("no (day, animal) partition had enough records")
    assign_terciles(grids)
    return grids


def cmd_estimate(args):
    grids = _estimate(args, [args.input])
    os.makedirs(args.out_dir, exist_ok=True)
    for g in grids:
        g.to_tsv(os.path.join(args.out_dir, f"velocity_{day_label(g.day)}_a{g.animal_id:02d}.tsv"))
    return EXIT_OK


def cmd_heatmap(args):
    grids = _estimate(args, args.input)
    vpath, cpath = export_heatmap(grids, args.out)
    print(vpath)
    print(cpath)
    return EXIT_OK


def cmd_selftest(args):
    results = checks.run_all()
    print(f"backend: {_backend.BACKEND}")
    print(checks.summarize(results))
    return EXIT_OK if checks.all_ok(results) else EXIT_SELFTEST


def _add_estimation_flags(p):
    p.add_argument("--alpha", type=float, default=0.32)
    p.add_argument("--kernel", choices=sorted(BUILTIN), default="gaussian")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--tz-offset", type=float, default=0.0, help="hours east of UTC for day boundaries")
    p.add_argument("--state-dir", help="save per-(day, animal) estimator snapshots here")
    p.add_argument("--resume", action="store_true", help="continue from snapshots in --state-dir")


def build_parser():
    ap = argparse.ArgumentParser(prog="recnw", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated dataset as CSV")
    p.add_argument("--kind", choices=("regression", "gape"), default="regression")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--profile", choices=("constant", "linear", "sine"), default="linear")
    p.add_argument("--animals", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("clt", help="Monte-Carlo asymptotic-normality experiment")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--N", type=int, default=2_000)
    p.add_argument("--alpha", type=float, default=0.32)
    p.add_argument("--kernel", choices=sorted(BUILTIN), default="gaussian")
    p.add_argument("--x", type=_floats, default=[0.4, 0.9])
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")
    p.add_argument("--hist-dir")
    p.add_argument("--bins", type=int, default=40)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("sweep", help="MSE of the derivative estimators versus n")
    p.add_argument("--n-list", type=lambda s: [int(v) for v in _floats(s)], default=[1000, 10000, 100000])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.32)
    p.add_argument("--kernel", choices=sorted(BUILTIN), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cv", help="cross-validate the bandwidth exponent")
    p.add_argument("--input", required=True, help="CSV with columns x,y")
    p.add_argument("--mode", choices=("oracle", "predictive"), default="predictive")
    p.add_argument("--kernel", choices=sorted(BUILTIN), default="gaussian")
    p.add_argument("--alphas", type=_floats, default=None)
    p.add_argument("--no-constraint", action="store_true", help="allow alpha >= 1/3")
    p.add_argument("--max-points", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("estimate", help="per-day velocity from a gape CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    _add_estimation_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("heatmap", help="velocity heatmap TSVs over all days and animals")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--out", required=True, help="output path prefix")
    _add_estimation_flags(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("selftest", help="streaming/batch, kernel and ground-truth invariants")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, InvalidRecordError, UnsupportedPointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
