#!/usr/bin/env python3
"""Stage-adjustment ablation for the cascade.

Compares, with paired seeds, the uniform-threshold baseline against the
three per-stage adjustments applied cumulatively: increasing exit
thresholds, then double-weak exits, then the early-stage feature mask
(air_temp withheld until stage 4).  The adjusted cascade should confirm
more truly-excellent records without raising the false-negative rate.
"""

import argparse
from dataclasses import replace

from _common import add_data_args, load_split, print_table

from seaqual.cascade import (DEFAULT_CASCADE_PARAMS, DEFAULT_N_STAGES,
                             DEFAULT_WEAK_THRESHOLDS, ThresholdPolicy,
                             default_feature_masks, evaluate_cascade,
                             fit_cascade)
from seaqual.evaluation import average_runs
from seaqual.rng import derive_seed


def policies() -> dict:
    inc = ThresholdPolicy(mode="increasing")
    weak = replace(inc, weak_thresholds=DEFAULT_WEAK_THRESHOLDS)
    masked = replace(weak, feature_masks=default_feature_masks(DEFAULT_N_STAGES))
    return {"uniform 0.80": ThresholdPolicy(uniform_theta=0.80),
            "+ increasing thetas": inc,
            "+ double-weak exits": weak,
            "+ feature masks": masked}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_data_args(ap)
    ap.add_argument("--limit", type=float, default=250.0)
    ap.add_argument("--n-runs", type=int, default=50)
    args = ap.parse_args()

    train, test = load_split(args)
    n_runs = 3 if args.quick else args.n_runs
    params = replace(DEFAULT_CASCADE_PARAMS,
                     n_estimators=40 if args.quick else DEFAULT_CASCADE_PARAMS.n_estimators)

    rows = []
    for name, policy in policies().items():
        reports = []
        for i in range(n_runs):
            model = fit_cascade(train, replace(params, seed=derive_seed(args.seed, i)),
                                policy)
            reports.append(evaluate_cascade(model, test, limit=args.limit))
        s = average_runs(reports)
        fn = "n/a" if s.fn_rate_mean is None else f"{100 * s.fn_rate_mean:.2f}%"
        exits = "/".join(f"{e:.0f}" for e in s.exits_by_stage_mean)
        rows.append([name, f"{s.tp_mean:.1f} ± {s.tp_std:.1f}",
                     f"{100 * s.tp_mean / s.n_below:.1f}%", fn,
                     f"{s.suspects_mean:.1f}", exits])

    print(f"train={len(train)} test={len(test)}, {n_runs} paired runs per policy")
    print_table(["policy", "TP", "TP share", "FN rate", "suspects",
                 "exits by stage"], rows)


if __name__ == "__main__":
    main()
