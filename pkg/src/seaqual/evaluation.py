"""Experiment protocol: repeated runs, sweeps, aggregation, and reports.

A "run" retrains the model with a fresh derived seed on a fixed split;
experiments average 20 (or 50) runs so the reported numbers measure the
method rather than one forest's luck.  True-positive rate here is the
recall of the ABOVE class -- the number that collapses on imbalanced
limits -- while below_rate is the recall of the BELOW class, the
filter's yield.  Reports carry both to keep the denominators explicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import svg
from .cascade import CascadeReport
from .dataio import ABOVE, BELOW, DEFAULT_FEATURES, Dataset, label
from .errors import ConfigError, ValidationError
from .forest import ForestParams, feature_importance, fit_forest, predict_class_batch
from .rng import derive_seed


@dataclass(frozen=True)
class SingleModelReport:
    limit: float
    n_test: int
    n_above: int
    n_runs: int
    feature_names: tuple
    accuracy_mean: float
    accuracy_std: float
    tp_rate_mean: float | None     # ABOVE recall; None when the test set has no ABOVE
    tp_rate_std: float | None
    below_rate_mean: float | None  # BELOW recall; None when the test set has no BELOW
    below_rate_std: float | None
    importance_mean: tuple
    importance_std: tuple

    @property
    def n_below(self) -> int:
        return self.n_test - self.n_above


@dataclass(frozen=True)
class SweepCurve:
    limits: tuple
    accuracy: tuple
    tp_rate: tuple        # entries may be None past the point where ABOVE runs out
    below_rate: tuple
    reports: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.limits, self.limits[1:])):
            raise ValidationError(f"sweep limits must be strictly increasing: {self.limits}")


@dataclass(frozen=True)
class CascadeRunSummary:
    limit: float
    n_test: int
    n_below: int
    n_above: int
    n_runs: int
    tp_mean: float
    tp_std: float
    fn_mean: float
    fn_std: float
    suspects_mean: float
    suspects_std: float
    tp_rate_mean: float | None
    tp_rate_std: float | None
    fn_rate_mean: float | None
    fn_rate_std: float | None
    exits_by_stage_mean: tuple


def _mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation; std is 0 for a single value."""
    a = np.asarray(values, dtype=np.float64)
    if a.size == 1:
        return float(a[0]), 0.0
    return float(a.mean()), float(a.std(ddof=1))


def single_model_experiment(train: Dataset, test: Dataset, limit: float,
                            params: ForestParams, n_runs: int = 20,
                            base_seed: int = 0,
                            features=DEFAULT_FEATURES) -> SingleModelReport:
    """Fit/score `n_runs` forests differing only in seed; aggregate."""
    if not train.records or not test.records:
        raise ValidationError("train and test must both be non-empty")
    if n_runs < 1:
        raise ConfigError(f"n_runs must be >= 1, got {n_runs}")
    ltrain = label(train, limit, features)
    ltest = label(test, limit, features)
    truth = ltest.labels
    n_above = ltest.n_above
    n_below = ltest.n_below

    accs, tps, brs, imps = [], [], [], []
    for i in range(n_runs):
        f = fit_forest(ltrain, replace(params, seed=derive_seed(base_seed, i)))
        pred = predict_class_batch(f, ltest.X)
        accs.append(float(np.mean(pred == truth)))
        if n_above:
            tps.append(float(np.mean(pred[truth == ABOVE] == ABOVE)))
        if n_below:
            brs.append(float(np.mean(pred[truth == BELOW] == BELOW)))
        imps.append(feature_importance(f))

    acc_m, acc_s = _mean_std(accs)
    tp_m, tp_s = _mean_std(tps) if n_above else (None, None)
    br_m, br_s = _mean_std(brs) if n_below else (None, None)
    imp = np.vstack(imps)
    imp_std = np.zeros(imp.shape[1]) if n_runs == 1 else imp.std(axis=0, ddof=1)
    return SingleModelReport(
        limit=limit, n_test=len(test), n_above=n_above, n_runs=n_runs,
        feature_names=tuple(features),
        accuracy_mean=acc_m, accuracy_std=acc_s,
        tp_rate_mean=tp_m, tp_rate_std=tp_s,
        below_rate_mean=br_m, below_rate_std=br_s,
        importance_mean=tuple(float(v) for v in imp.mean(axis=0)),
        importance_std=tuple(float(v) for v in imp_std))


def limit_sweep(train: Dataset, test: Dataset, limits, params: ForestParams,
                n_runs: int = 20, base_seed: int = 0,
                features=DEFAULT_FEATURES) -> SweepCurve:
    limits = tuple(limits)
    if not limits:
        raise ConfigError("sweep needs at least one limit")
    reports = tuple(
        single_model_experiment(train, test, lim, params, n_runs, base_seed, features)
        for lim in limits)
    return SweepCurve(limits=limits,
                      accuracy=tuple(r.accuracy_mean for r in reports),
                      tp_rate=tuple(r.tp_rate_mean for r in reports),
                      below_rate=tuple(r.below_rate_mean for r in reports),
                      reports=reports)


def _require_same(reports, attrs) -> None:
    first = reports[0]
    for r in reports[1:]:
        for a in attrs:
            if getattr(r, a) != getattr(first, a):
                raise ConfigError(
                    f"cannot average reports with differing {a}: "
                    f"{getattr(first, a)!r} vs {getattr(r, a)!r}")


def average_runs(reports):
    """Aggregate homogeneous per-run reports.

    Rates and counts are averaged with across-run sample deviations
    (fractional mean counts are intentional); structural counts such as
    test-set sizes must agree and run counts add up.
    """
    reports = list(reports)
    if not reports:
        raise ConfigError("cannot average an empty report list")
    kinds = {type(r) for r in reports}
    if len(kinds) > 1:
        raise ConfigError(f"cannot average mixed report types: "
                          f"{sorted(k.__name__ for k in kinds)}")
    if isinstance(reports[0], CascadeReport):
        return _average_cascade(reports)
    if isinstance(reports[0], SingleModelReport):
        return _average_single(reports)
    raise ConfigError(f"cannot average reports of type {type(reports[0]).__name__}")


def _average_cascade(reports) -> CascadeRunSummary:
    _require_same(reports, ("limit", "n_test", "n_below", "n_above"))
    n_stages = {len(r.exits_by_stage) for r in reports}
    if len(n_stages) > 1:
        raise ConfigError(f"cannot average cascades with differing stage counts {n_stages}")
    first = reports[0]
    tp_m, tp_s = _mean_std([r.true_positive for r in reports])
    fn_m, fn_s = _mean_std([r.false_negative for r in reports])
    su_m, su_s = _mean_std([r.suspects for r in reports])
    if first.n_below:
        tpr_m, tpr_s = _mean_std([r.tp_rate for r in reports])
    else:
        tpr_m = tpr_s = None
    if first.n_above:
        fnr_m, fnr_s = _mean_std([r.fn_rate for r in reports])
    else:
        fnr_m = fnr_s = None
    exits = np.array([r.exits_by_stage for r in reports], dtype=np.float64)
    return CascadeRunSummary(
        limit=first.limit, n_test=first.n_test, n_below=first.n_below,
        n_above=first.n_above, n_runs=len(reports),
        tp_mean=tp_m, tp_std=tp_s, fn_mean=fn_m, fn_std=fn_s,
        suspects_mean=su_m, suspects_std=su_s,
        tp_rate_mean=tpr_m, tp_rate_std=tpr_s,
        fn_rate_mean=fnr_m, fn_rate_std=fnr_s,
        exits_by_stage_mean=tuple(float(v) for v in exits.mean(axis=0)))


def _average_single(reports) -> SingleModelReport:
    _require_same(reports, ("limit", "n_test", "n_above", "feature_names"))
    first = reports[0]
    acc_m, acc_s = _mean_std([r.accuracy_mean for r in reports])
    if first.n_above:
        tp_m, tp_s = _mean_std([r.tp_rate_mean for r in reports])
    else:
        tp_m = tp_s = None
    if first.n_below:
        br_m, br_s = _mean_std([r.below_rate_mean for r in reports])
    else:
        br_m = br_s = None
    imp = np.array([r.importance_mean for r in reports], dtype=np.float64)
    imp_std = np.zeros(imp.shape[1]) if len(reports) == 1 else imp.std(axis=0, ddof=1)
    return SingleModelReport(
        limit=first.limit, n_test=first.n_test, n_above=first.n_above,
        n_runs=sum(r.n_runs for r in reports), feature_names=first.feature_names,
        accuracy_mean=acc_m, accuracy_std=acc_s,
        tp_rate_mean=tp_m, tp_rate_std=tp_s,
        below_rate_mean=br_m, below_rate_std=br_s,
        importance_mean=tuple(float(v) for v in imp.mean(axis=0)),
        importance_std=tuple(float(v) for v in imp_std))


# ---------------------------------------------------------------- reports

FORMATS = ("csv", "json", "markdown")


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _rows_single(r: SingleModelReport):
    header = ["limit", "n_test", "n_above", "n_runs",
              "accuracy_mean", "accuracy_std",
              "tp_rate_mean", "tp_rate_std",
              "below_rate_mean", "below_rate_std"]
    row = [r.limit, r.n_test, r.n_above, r.n_runs,
           r.accuracy_mean, r.accuracy_std,
           r.tp_rate_mean, r.tp_rate_std,
           r.below_rate_mean, r.below_rate_std]
    for name, m, s in zip(r.feature_names, r.importance_mean, r.importance_std):
        header += [f"imp_{name}_mean", f"imp_{name}_std"]
        row += [m, s]
    return "single_model", header, [row]


def _rows_sweep(c: SweepCurve):
    header = ["limit", "accuracy_mean", "accuracy_std",
              "tp_rate_mean", "tp_rate_std", "below_rate_mean", "below_rate_std"]
    rows = [[r.limit, r.accuracy_mean, r.accuracy_std,
             r.tp_rate_mean, r.tp_rate_std, r.below_rate_mean, r.below_rate_std]
            for r in c.reports]
    return "limit_sweep", header, rows


def _rows_cascade(r: CascadeReport):
    header = ["limit", "n_test", "n_below", "n_above",
              "true_positive", "false_negative", "suspects",
              "tp_rate", "fn_rate", "n_strong", "n_weak"]
    row = [r.limit, r.n_test, r.n_below, r.n_above,
           r.true_positive, r.false_negative, r.suspects,
           r.tp_rate, r.fn_rate, r.n_strong, r.n_weak]
    for i, v in enumerate(r.exits_by_stage, 1):
        header.append(f"exits_stage{i}")
        row.append(v)
    return "cascade", header, [row]


def _rows_cascade_summary(r: CascadeRunSummary):
    header = ["limit", "n_test", "n_below", "n_above", "n_runs",
              "tp_mean", "tp_std", "fn_mean", "fn_std",
              "suspects_mean", "suspects_std",
              "tp_rate_mean", "tp_rate_std", "fn_rate_mean", "fn_rate_std"]
    row = [r.limit, r.n_test, r.n_below, r.n_above, r.n_runs,
           r.tp_mean, r.tp_std, r.fn_mean, r.fn_std,
           r.suspects_mean, r.suspects_std,
           r.tp_rate_mean, r.tp_rate_std, r.fn_rate_mean, r.fn_rate_std]
    for i, v in enumerate(r.exits_by_stage_mean, 1):
        header.append(f"exits_stage{i}_mean")
        row.append(v)
    return "cascade_summary", header, [row]


def _tabulate(report):
    for klass, fn in ((SingleModelReport, _rows_single), (SweepCurve, _rows_sweep),
                      (CascadeReport, _rows_cascade), (CascadeRunSummary, _rows_cascade_summary)):
        if isinstance(report, klass):
            return fn(report)
    raise ConfigError(f"cannot emit a report for {type(report).__name__}")


def emit_report(report, fmt: str, provenance: dict | None = None) -> str:
    """Render a report deterministically as csv, json, or markdown."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    kind, header, rows = _tabulate(report)
    if fmt == "csv":
        lines = []
        if provenance:
            prov = " ".join(f"{k}={provenance[k]}" for k in sorted(provenance))
            lines.append(f"# {kind} {prov}")
        lines.append(",".join(header))
        lines += [",".join(_num(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {"type": kind,
               "columns": header,
               "rows": [[v for v in row] for row in rows]}
        if provenance:
            doc["provenance"] = provenance
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    # markdown
    out = [f"### {kind}", ""]
    if provenance:
        out.insert(1, "")
        out.insert(1, " ".join(f"`{k}={provenance[k]}`" for k in sorted(provenance)))
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for row in rows:
        cells = ["/" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v))
                 for v in row]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def emit_plot(curve: SweepCurve, provenance: dict | None = None) -> str:
    """SVG of accuracy and ABOVE-recall against the classification limit."""
    if not isinstance(curve, SweepCurve):
        raise ConfigError(f"emit_plot wants a SweepCurve, got {type(curve).__name__}")
    series = [("accuracy", curve.accuracy)]
    if all(v is not None for v in curve.tp_rate):
        series.append(("tp_rate", curve.tp_rate))
    comment = None
    if provenance:
        comment = " ".join(f"{k}={provenance[k]}" for k in sorted(provenance))
    return svg.line_chart(list(curve.limits), series,
                          x_label="classification limit (CFU/100 mL)",
                          y_label="rate", comment=comment)
