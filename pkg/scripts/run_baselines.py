#!/usr/bin/env python3
"""Single-forest baseline at the regulatory limit.

Demonstrates the imbalance pathology: one forest trained at 250 CFU/100 mL
reaches high accuracy while recalling almost none of the contaminated
records.  Prints the aggregate table and the mean feature importances, and
writes single_model.{csv,json,md} under --outdir.
"""

import argparse
from pathlib import Path

from _common import add_data_args, load_split, print_table

from seaqual.evaluation import emit_report, single_model_experiment
from seaqual.forest import ForestParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_data_args(ap)
    ap.add_argument("--limit", type=float, default=250.0)
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--n-runs", type=int, default=20)
    ap.add_argument("--outdir", default="out/baselines")
    args = ap.parse_args()

    train, test = load_split(args)
    n_runs = 3 if args.quick else args.n_runs
    trees = 20 if args.quick else args.trees
    rep = single_model_experiment(train, test, args.limit,
                                  ForestParams(n_estimators=trees),
                                  n_runs=n_runs, base_seed=args.seed)

    def pct(v):
        return "n/a" if v is None else f"{100 * v:.1f}%"

    print(f"train={len(train)} test={len(test)} "
          f"({rep.n_above} above the limit of {args.limit:g}), {n_runs} runs")
    print_table(
        ["metric", "mean", "std"],
        [["accuracy", pct(rep.accuracy_mean), pct(rep.accuracy_std)],
         ["above recall (tp_rate)", pct(rep.tp_rate_mean), pct(rep.tp_rate_std)],
         ["below recall", pct(rep.below_rate_mean), pct(rep.below_rate_std)]])
    print()
    ranked = sorted(zip(rep.feature_names, rep.importance_mean),
                    key=lambda t: -t[1])
    print_table(["feature", "importance"],
                [[n, f"{v:.3f}"] for n, v in ranked])

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for fmt, ext in (("csv", "csv"), ("json", "json"), ("markdown", "md")):
        (out / f"single_model.{ext}").write_text(emit_report(rep, fmt))
    print(f"\nwrote {out}/single_model.{{csv,json,md}}")


if __name__ == "__main__":
    main()
