#!/usr/bin/env python3
"""Accuracy/recall trade-off as the classification limit drops toward the median.

Sweeps the training limit from the 5th percentile of the pooled
concentrations up to their median (or over --limits) and reports, per limit,
the multi-run mean accuracy and both recalls.  As the limit approaches the
median the classes balance: recall of the rare class rises while raw
accuracy falls.  Writes sweep.csv and sweep.svg under --outdir.
"""

import argparse
from pathlib import Path

import numpy as np
from _common import add_data_args, load_split, print_table

from seaqual.evaluation import emit_plot, emit_report, limit_sweep
from seaqual.forest import ForestParams
from seaqual.stats import median, quantile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_data_args(ap)
    ap.add_argument("--limits", help="comma-separated limits (default: 7 points "
                                     "spanning p5..median of train+test)")
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--n-runs", type=int, default=20)
    ap.add_argument("--outdir", default="out/sweep")
    args = ap.parse_args()

    train, test = load_split(args)
    if args.limits:
        limits = sorted({float(v) for v in args.limits.split(",")})
    else:
        ec = np.concatenate([train.ecoli_values(), test.ecoli_values()])
        lo, hi = max(1.0, quantile(ec, 0.05)), median(ec)
        limits = sorted({round(v) for v in np.linspace(lo, hi, 7)})
    n_runs = 3 if args.quick else args.n_runs
    trees = 20 if args.quick else args.trees

    curve = limit_sweep(train, test, limits, ForestParams(n_estimators=trees),
                        n_runs=n_runs, base_seed=args.seed)

    def pct(v):
        return "n/a" if v is None else f"{100 * v:.1f}%"

    print_table(["limit", "accuracy", "above recall", "below recall"],
                [[f"{l:g}", pct(a), pct(t), pct(b)]
                 for l, a, t, b in zip(curve.limits, curve.accuracy,
                                       curve.tp_rate, curve.below_rate)])

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(emit_report(curve, "csv"))
    (out / "sweep.svg").write_text(emit_plot(curve))
    print(f"\nwrote {out}/sweep.csv and {out}/sweep.svg")


if __name__ == "__main__":
    main()
