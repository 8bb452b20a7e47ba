#!/usr/bin/env python3
"""Cascade exit-threshold grid.

Fits the staged cascade once per seed and rescores it under a grid of
uniform exit thresholds (re-thresholding reuses the fitted forests, so the
grid costs one fit per run).  Reports, per theta, the multi-run mean count
of confirmed-excellent records (TP), the false-negative rate among
contaminated records, and the suspect pool size.  Raising theta trades
filter yield for safety margin.
"""

import argparse
from dataclasses import replace

from _common import add_data_args, load_split, print_table

from seaqual.cascade import (DEFAULT_CASCADE_PARAMS, ThresholdPolicy,
                             evaluate_cascade, fit_cascade, with_policy)
from seaqual.evaluation import average_runs
from seaqual.rng import derive_seed


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_data_args(ap)
    ap.add_argument("--thetas", default="0.70,0.75,0.80,0.85,0.90",
                    help="comma-separated uniform exit thresholds")
    ap.add_argument("--limit", type=float, default=250.0)
    ap.add_argument("--n-runs", type=int, default=20)
    args = ap.parse_args()

    train, test = load_split(args)
    thetas = [float(v) for v in args.thetas.split(",")]
    n_runs = 3 if args.quick else args.n_runs
    params = replace(DEFAULT_CASCADE_PARAMS,
                     n_estimators=40 if args.quick else DEFAULT_CASCADE_PARAMS.n_estimators)

    by_theta = {t: [] for t in thetas}
    for i in range(n_runs):
        model = fit_cascade(train, replace(params, seed=derive_seed(args.seed, i)))
        for t in thetas:
            m = with_policy(model, ThresholdPolicy(uniform_theta=t))
            by_theta[t].append(evaluate_cascade(m, test, limit=args.limit))

    rows = []
    for t in thetas:
        s = average_runs(by_theta[t])
        fn = "n/a" if s.fn_rate_mean is None else f"{100 * s.fn_rate_mean:.1f}%"
        rows.append([f"{t:.2f}", f"{s.tp_mean:.1f}",
                     f"{100 * s.tp_mean / s.n_below:.1f}%", fn,
                     f"{s.suspects_mean:.1f}"])
    print(f"train={len(train)} test={len(test)} "
          f"({average_runs(by_theta[thetas[0]]).n_above} above {args.limit:g}), "
          f"{n_runs} runs per theta")
    print_table(["theta", "TP", "TP share", "FN rate", "suspects"], rows)


if __name__ == "__main__":
    main()
