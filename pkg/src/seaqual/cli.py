"""Command-line front end.

Wires the library into reproducible runs: a TOML config file supplies
defaults, flags override it, and the fully-resolved configuration is
echoed into the output directory next to the artifacts.  Every artifact
embeds (or carries in a sidecar) the config hash and seed it was
produced under.  Exit codes: 0 success, 1 validation/config/parse
problem, 2 I/O problem.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, stats
from .cascade import (DEFAULT_CASCADE_PARAMS, DEFAULT_N_STAGES, DEFAULT_WEAK_THRESHOLDS,
                      MIN_STAGE_SIZE, TRIM_PERCENTILE, CascadeModel, ThresholdPolicy,
                      adjusted_policy, cascade_from_dict, cascade_to_dict,
                      classify_batch, default_feature_masks, evaluate_cascade,
                      fit_cascade)
from .dataio import (DEFAULT_FEATURES, Dataset, label, read_dataset, remove_outliers,
                     station_stats, write_dataset)
from .errors import ConfigError, SeaqualError
from .evaluation import (FORMATS, average_runs, emit_plot, emit_report, limit_sweep,
                         single_model_experiment)
from .forest import (Forest, ForestParams, fit_forest, forest_from_dict, forest_to_dict,
                     predict_class_batch, predict_proba_batch)
from .rng import derive_seed
from .splits import GROUPS, SplitSpec, StationGroup, select_group
from .synth import SynthConfig, default_config, generate_dataset, station_from_moments

MODEL_SCHEMA = "seaqual-model/1"
EXT = {"csv": "csv", "json": "json", "markdown": "md"}

log = logging.getLogger("seaqual")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the package's exit codes."""

    def error(self, message):
        raise ConfigError(message)


# ------------------------------------------------------------- resolution

def _load_toml(path: str) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None


def _pick(flag, cfg: dict, key: str, default):
    """Flag beats config file beats default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _csv_list(text, cast):
    return tuple(cast(part.strip()) for part in str(text).split(",") if part.strip())


def _resolve_forest(args, cfg: dict, cascade_defaults: bool) -> dict:
    sec = cfg.get("forest", {})
    base = DEFAULT_CASCADE_PARAMS if cascade_defaults else ForestParams()
    return {
        "n_estimators": int(_pick(args.trees, sec, "n_estimators", base.n_estimators)),
        "max_depth": int(_pick(args.max_depth, sec, "max_depth", base.max_depth)),
        "min_samples_split": int(_pick(args.min_split, sec, "min_samples_split",
                                       base.min_samples_split)),
        "max_features": (int(args.max_features) if args.max_features is not None
                         else sec.get("max_features")),
    }


def _forest_params(resolved: dict, seed: int) -> ForestParams:
    return ForestParams(seed=seed, **resolved["forest"])


def _resolve_policy_dict(args, cfg: dict) -> dict:
    sec = cfg.get("cascade", {})
    adjusted = bool(getattr(args, "adjusted", False) or sec.get("adjusted", False))
    out = {
        "n_stages": int(_pick(getattr(args, "stages", None), sec, "stages", DEFAULT_N_STAGES)),
        "theta_mode": str(_pick(getattr(args, "theta_mode", None), sec, "theta_mode",
                                "increasing" if adjusted else "uniform")),
        "theta": float(_pick(getattr(args, "theta", None), sec, "theta", 0.80)),
        "thetas": list(_csv_list(args.thetas, float)) if getattr(args, "thetas", None)
                  else sec.get("thetas"),
        "weak": bool(_pick(getattr(args, "weak", None), sec, "weak", adjusted)),
        "masks": bool(_pick(getattr(args, "masks", None), sec, "masks", adjusted)),
        "weak_pairing": str(_pick(getattr(args, "weak_pairing", None), sec,
                                  "weak_pairing", "previous")),
        "strict_greater": bool(sec.get("strict_greater", False)),
        "trim_percentile": float(sec.get("trim_percentile", TRIM_PERCENTILE)),
        "min_stage_size": int(sec.get("min_stage_size", MIN_STAGE_SIZE)),
    }
    return out


def _policy_from_resolved(c: dict, features) -> ThresholdPolicy:
    n = c["n_stages"]
    kwargs = {
        "mode": c["theta_mode"],
        "uniform_theta": c["theta"],
        "weak_pairing": c["weak_pairing"],
        "strict_greater": c["strict_greater"],
    }
    if c["thetas"]:
        kwargs["increasing_thetas"] = tuple(float(v) for v in c["thetas"])
    if c["weak"]:
        kwargs["weak_thresholds"] = tuple(
            (DEFAULT_WEAK_THRESHOLDS + (0.75,) * n)[:n])
    if c["masks"]:
        kwargs["feature_masks"] = default_feature_masks(n, features)
    return ThresholdPolicy(**kwargs)


def _resolve_synth(args, cfg: dict, seed: int) -> dict | None:
    sec = cfg.get("synth")
    wants = getattr(args, "command", "") == "synth" or (sec is not None)
    if not wants:
        return None
    sec = sec or {}
    stations = sec.get("stations")
    out = {
        "seed": seed,
        "salinity_ecoli_corr": float(sec.get("salinity_ecoli_corr", -0.5)),
        "spring_salinity_offset": float(sec.get("spring_salinity_offset", 3.4)),
        "rain_zero_prob": float(sec.get("rain_zero_prob", 0.85)),
        "stations": stations,  # None means the built-in nine-station calibration
    }
    return out


def _synth_config(resolved: dict) -> SynthConfig:
    c = dict(resolved["synth"])
    stations = c.pop("stations")
    if stations is None:
        return SynthConfig(**c)
    specs = tuple(station_from_moments(
        code=s["code"], n=int(s["n"]),
        ecoli_mean=float(s["ecoli_mean"]), ecoli_median=float(s["ecoli_median"]),
        salinity_mean=float(s["salinity_mean"]),
        salinity_sd=float(s.get("salinity_sd", 1.2)),
    ) for s in stations)
    return SynthConfig(stations=specs, **c)


def _resolve(args) -> dict:
    """Merge config file and flags into one plain dict (the provenance unit)."""
    cfg = _load_toml(args.config) if getattr(args, "config", None) else {}
    seed = int(_pick(getattr(args, "seed", None), cfg.get("eval", {}), "base_seed", 0))
    resolved = {"command": args.command, "seed": seed, "version": __version__}

    if hasattr(args, "input"):
        resolved["input"] = args.input
        resolved["remove_outliers"] = bool(getattr(args, "remove_outliers", False))
    if hasattr(args, "split"):
        spec = _pick(args.split, cfg.get("split", {}), "spec", None)
        resolved["split"] = str(spec) if spec else None
        resolved["group"] = str(_pick(getattr(args, "group", None),
                                      cfg.get("split", {}), "group", "ALL"))
    if hasattr(args, "features"):
        feats = _pick(args.features, cfg.get("eval", {}), "features", None)
        resolved["features"] = (list(_csv_list(feats, str)) if isinstance(feats, str)
                                else list(feats) if feats else list(DEFAULT_FEATURES))
    if hasattr(args, "limit"):
        resolved["limit"] = float(_pick(args.limit, cfg.get("eval", {}), "limit", 250))
    if hasattr(args, "n_runs"):
        resolved["n_runs"] = int(_pick(args.n_runs, cfg.get("eval", {}), "n_runs", 20))
    if hasattr(args, "trees"):
        resolved["forest"] = _resolve_forest(
            args, cfg, cascade_defaults=getattr(args, "model_kind", None) == "cascade"
            or args.command == "train-cascade")
    if args.command in ("train-cascade", "evaluate", "classify"):
        resolved["cascade"] = _resolve_policy_dict(args, cfg)
    if args.command in ("synth", "split", "evaluate", "sweep", "train-single",
                        "train-cascade"):
        resolved["synth"] = _resolve_synth(args, cfg, seed)
    if hasattr(args, "limits"):
        resolved["limits"] = (list(_csv_list(args.limits, float)) if args.limits
                              else cfg.get("eval", {}).get("limits"))
        resolved["sweep_points"] = int(getattr(args, "sweep_points", None)
                                       or cfg.get("eval", {}).get("sweep_points", 7))
    if hasattr(args, "model_kind"):
        resolved["model_kind"] = str(_pick(args.model_kind, cfg.get("eval", {}),
                                           "model_kind", "single"))
    return resolved


def _config_hash(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _provenance(resolved: dict) -> dict:
    return {"tool": f"seaqual/{__version__}",
            "config_hash": _config_hash(resolved),
            "seed": resolved["seed"]}


# ------------------------------------------------------------ toml echo

def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v) if isinstance(v, float) else str(v)
    return json.dumps(str(v))


def _toml_dumps(d: dict) -> str:
    """Just enough TOML for the resolved-config echo (None values omitted)."""
    lines = []
    tables = []
    for k in sorted(d):
        v = d[k]
        if v is None:
            continue
        if isinstance(v, dict):
            tables.append((k, v))
        elif isinstance(v, (list, tuple)):
            if v and isinstance(v[0], dict):
                tables.append((k, v))
            else:
                lines.append(f"{k} = [{', '.join(_toml_scalar(x) for x in v)}]")
        else:
            lines.append(f"{k} = {_toml_scalar(v)}")
    for k, v in tables:
        if isinstance(v, dict):
            lines.append("")
            lines.append(f"[{k}]")
            lines.append(_toml_dumps(v).rstrip("\n"))
        else:
            for item in v:
                lines.append("")
                lines.append(f"[[{k}]]")
                lines.append(_toml_dumps(item).rstrip("\n"))
    return "\n".join(line for line in lines if line is not None).strip("\n") + "\n"


def _echo_config(resolved: dict, outdir: Path) -> None:
    prov = _provenance(resolved)
    text = (f"# resolved configuration (hash {prov['config_hash']})\n"
            + _toml_dumps(resolved))
    (outdir / "config.resolved.toml").write_text(text, encoding="utf-8")


# ------------------------------------------------------------- data I/O

def _load_data(resolved: dict) -> Dataset:
    path = resolved.get("input")
    synth = resolved.get("synth")
    if path:
        d = read_dataset(path)
    elif synth is not None:
        d = generate_dataset(_synth_config(resolved))
    else:
        raise ConfigError("no data source: pass --input or provide a [synth] section")
    if resolved.get("remove_outliers"):
        d = remove_outliers(d)
    return d


def _split_data(resolved: dict, d: Dataset) -> tuple[Dataset, Dataset]:
    if not resolved.get("split"):
        raise ConfigError("this command needs --split (or split.spec in the config)")
    group = resolved.get("group", "ALL")
    if group not in GROUPS:
        raise ConfigError(f"unknown station group {group!r}; expected one of {sorted(GROUPS)}")
    d = select_group(d, GROUPS[group])
    return SplitSpec.parse(resolved["split"]).apply(d)


def _outdir(args) -> Path:
    out = Path(getattr(args, "outdir", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _formats(args) -> tuple[str, ...]:
    fmts = _csv_list(getattr(args, "formats", None) or "csv,json", str)
    for f in fmts:
        if f not in FORMATS:
            raise ConfigError(f"unknown format {f!r}; expected subset of {FORMATS}")
    return fmts


def _write_dataset_with_meta(d: Dataset, path: Path, prov: dict) -> None:
    write_dataset(d, path)
    meta = dict(prov, records=len(d), provenance=d.provenance)
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_model(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
                    encoding="utf-8")


def _load_model(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ConfigError(f"{path}: unsupported model schema {doc.get('schema')!r}")
    return doc


# ------------------------------------------------------------- commands

def _cmd_ingest(args) -> int:
    resolved = _resolve(args)
    d = read_dataset(args.input)
    n_flagged = sum(1 for r in d.records if r.outlier)
    clean = remove_outliers(d) if resolved["remove_outliers"] else d
    print(f"records: {len(d)} ({n_flagged} flagged as outliers"
          f"{', removed' if resolved['remove_outliers'] else ''})")
    print(f"stations: {', '.join(clean.stations())}")
    print(f"years: {clean.years()[0]}..{clean.years()[-1]}")
    rows = station_stats(clean)
    print(f"{'station':<8}{'n':>6}{'ecoli mean':>12}{'median':>9}"
          f"{'sal mean':>10}{'median':>9}")
    for s in rows:
        print(f"{s.station:<8}{s.n:>6}{s.ecoli_mean:>12.1f}{s.ecoli_median:>9.1f}"
              f"{s.salinity_mean:>10.2f}{s.salinity_median:>9.2f}")
    if args.outdir:
        out = _outdir(args)
        prov = _provenance(resolved)
        header = "station,n,ecoli_mean,ecoli_median,salinity_mean,salinity_median"
        body = "\n".join(
            f"{s.station},{s.n},{repr(s.ecoli_mean)},{repr(s.ecoli_median)},"
            f"{repr(s.salinity_mean)},{repr(s.salinity_median)}" for s in rows)
        prov_line = " ".join(f"{k}={prov[k]}" for k in sorted(prov))
        (out / "station_stats.csv").write_text(
            f"# station_stats {prov_line}\n{header}\n{body}\n", encoding="utf-8")
        if resolved["remove_outliers"]:
            _write_dataset_with_meta(clean, out / "clean.csv", prov)
        _echo_config(resolved, out)
    return 0


def _cmd_synth(args) -> int:
    resolved = _resolve(args)
    d = generate_dataset(_synth_config(resolved))
    out_path = Path(args.out or (Path(args.outdir or ".") / "synthetic.csv"))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    prov = _provenance(resolved)
    _write_dataset_with_meta(d, out_path, prov)
    if args.outdir:
        _echo_config(resolved, _outdir(args))
    above = sum(1 for r in d.records if r.ecoli > 250)
    log.info("wrote %d records to %s (%d above 250 CFU/100 mL)", len(d), out_path, above)
    print(out_path)
    return 0


def _cmd_split(args) -> int:
    resolved = _resolve(args)
    d = _load_data(resolved)
    train, test = _split_data(resolved, d)
    out = _outdir(args)
    prov = _provenance(resolved)
    _write_dataset_with_meta(train, out / "train.csv", prov)
    _write_dataset_with_meta(test, out / "test.csv", prov)
    _echo_config(resolved, out)
    log.info("train %d records, test %d records", len(train), len(test))
    print(f"{out / 'train.csv'}\n{out / 'test.csv'}")
    return 0


def _cmd_train_single(args) -> int:
    resolved = _resolve(args)
    d = _load_data(resolved)
    features = tuple(resolved["features"])
    params = _forest_params(resolved, resolved["seed"])
    f = fit_forest(label(d, resolved["limit"], features), params)
    doc = {"schema": MODEL_SCHEMA, "kind": "single",
           "limit": resolved["limit"],
           "provenance": _provenance(resolved),
           "forest": forest_to_dict(f)}
    _write_model(doc, Path(args.out))
    log.info("trained %d trees on %d records at limit %s",
             params.n_estimators, len(d), resolved["limit"])
    print(args.out)
    return 0


def _cmd_train_cascade(args) -> int:
    resolved = _resolve(args)
    d = _load_data(resolved)
    features = tuple(resolved["features"])
    c = resolved["cascade"]
    policy = _policy_from_resolved(c, features)
    params = _forest_params(resolved, resolved["seed"])
    model = fit_cascade(d, params, policy, n_stages=c["n_stages"], features=features,
                        trim_percentile=c["trim_percentile"],
                        min_stage_size=c["min_stage_size"])
    doc = {"schema": MODEL_SCHEMA, "kind": "cascade",
           "provenance": _provenance(resolved),
           "cascade": cascade_to_dict(model)}
    _write_model(doc, Path(args.out))
    log.info("trained %d cascade stages (sizes %s)", model.n_stages,
             [s.n_train for s in model.stages])
    print(args.out)
    return 0


def _fmt_prob(p: float) -> str:
    return repr(round(float(p), 6))


def _cmd_classify(args) -> int:
    resolved = _resolve(args)
    doc = _load_model(args.model)
    d = _load_data(resolved)
    prov = _provenance(resolved)
    prov_line = " ".join(f"{k}={prov[k]}" for k in sorted(prov))
    lines = [f"# verdicts model={doc['kind']} {prov_line}"]
    if doc["kind"] == "cascade":
        model = cascade_from_dict(doc["cascade"])
        theta = getattr(args, "theta", None)
        if theta is not None:
            # strict uniform re-threshold: weak exits off so theta alone rules
            policy = replace(model.policy, mode="uniform",
                             uniform_theta=float(theta), weak_thresholds=None)
            from .cascade import with_policy
            model = with_policy(model, policy)
        lines.append("id,verdict,stage,rule,probabilities")
        for rec, pred in zip(d.records, classify_batch(model, d.records)):
            probs = ";".join(_fmt_prob(p) for p in pred.probabilities)
            lines.append(f"{rec.id},{pred.verdict},"
                         f"{pred.stage if pred.stage else ''},"
                         f"{pred.rule or ''},{probs}")
    elif doc["kind"] == "single":
        f = forest_from_dict(doc["forest"])
        labeled = label(d, doc["limit"], tuple(f.feature_names))
        probas = predict_proba_batch(f, labeled.X)
        classes = predict_class_batch(f, labeled.X)
        lines.append("id,class,proba")
        for rec, k, p in zip(d.records, classes, probas):
            lines.append(f"{rec.id},{'below' if k == 0 else 'above'},{_fmt_prob(p)}")
    else:
        raise ConfigError(f"unknown model kind {doc['kind']!r}")
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(out_path)
    return 0


def _emit_all(report, out: Path, stem: str, fmts, prov: dict) -> None:
    for fmt in fmts:
        (out / f"{stem}.{EXT[fmt]}").write_text(
            emit_report(report, fmt, provenance=prov), encoding="utf-8")


def _cmd_evaluate(args) -> int:
    resolved = _resolve(args)
    d = _load_data(resolved)
    train, test = _split_data(resolved, d)
    fmts = _formats(args)
    out = _outdir(args)
    prov = _provenance(resolved)
    features = tuple(resolved["features"])
    limit = resolved["limit"]
    n_runs = resolved["n_runs"]
    seed = resolved["seed"]

    if resolved["model_kind"] == "single":
        params = _forest_params(resolved, 0)
        report = single_model_experiment(train, test, limit, params,
                                         n_runs=n_runs, base_seed=seed,
                                         features=features)
        _emit_all(report, out, "single_model", fmts, prov)
        print(f"accuracy {report.accuracy_mean:.3f}  tp_rate "
              f"{'absent' if report.tp_rate_mean is None else f'{report.tp_rate_mean:.3f}'}"
              f"  ({n_runs} runs)")
    elif resolved["model_kind"] == "cascade":
        c = resolved["cascade"]
        policy = _policy_from_resolved(c, features)
        reports = []
        for i in range(n_runs):
            params = _forest_params(resolved, derive_seed(seed, i))
            model = fit_cascade(train, params, policy, n_stages=c["n_stages"],
                                features=features,
                                trim_percentile=c["trim_percentile"],
                                min_stage_size=c["min_stage_size"])
            reports.append(evaluate_cascade(model, test, limit))
        summary = average_runs(reports) if n_runs > 1 else reports[0]
        _emit_all(summary, out, "cascade", fmts, prov)
        if n_runs > 1:
            fn = "absent" if summary.fn_rate_mean is None else f"{summary.fn_rate_mean:.3f}"
            print(f"tp {summary.tp_mean:.1f}/{summary.n_below}  fn_rate {fn}  "
                  f"suspects {summary.suspects_mean:.1f}  ({n_runs} runs)")
        else:
            print(f"tp {summary.true_positive}/{summary.n_below}  "
                  f"fn {summary.false_negative}/{summary.n_above}  "
                  f"suspects {summary.suspects}")
    else:
        raise ConfigError(f"model kind must be single or cascade, "
                          f"got {resolved['model_kind']!r}")
    _echo_config(resolved, out)
    return 0


def _cmd_sweep(args) -> int:
    resolved = _resolve(args)
    d = _load_data(resolved)
    train, test = _split_data(resolved, d)
    fmts = _formats(args)
    out = _outdir(args)
    prov = _provenance(resolved)

    limits = resolved.get("limits")
    if not limits:
        ec = d.ecoli_values()
        lo = max(1.0, stats.quantile(ec, 0.05))
        hi = stats.median(ec)
        if hi <= lo:
            raise ConfigError("cannot derive sweep limits: median <= 5th percentile")
        npts = resolved["sweep_points"]
        step = (hi - lo) / (npts - 1)
        limits = sorted({round(lo + i * step) for i in range(npts)})
        resolved["limits"] = [float(v) for v in limits]

    params = _forest_params(resolved, 0)
    curve = limit_sweep(train, test, limits, params,
                        n_runs=resolved["n_runs"], base_seed=resolved["seed"],
                        features=tuple(resolved["features"]))
    _emit_all(curve, out, "sweep", fmts, prov)
    (out / "sweep.svg").write_text(emit_plot(curve, provenance=prov), encoding="utf-8")
    _echo_config(resolved, out)
    print(out / "sweep.svg")
    return 0


# --------------------------------------------------------------- parser

def _add_common(p, *, data=False, split=False, model=False, outputs=False):
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--threads", type=int,
                   help="compute threads (clamped to the machine's cores)")
    p.add_argument("--verbose", action="store_true", help="chatty logging")
    if data:
        p.add_argument("--input", help="dataset CSV (omit to use the [synth] config)")
        p.add_argument("--remove-outliers", action="store_true",
                       help="drop records flagged outlier=1 after loading")
    if split:
        p.add_argument("--split", help="uniform:k=5,offset=4 | temporal:year=Y | "
                                       "spatial:station=S")
        p.add_argument("--group", help="station group: ALL, LOW, or HIGH")
    if model:
        p.add_argument("--features", help="comma-separated feature columns")
        p.add_argument("--trees", type=int, help="number of trees")
        p.add_argument("--max-depth", type=int, help="tree depth cap")
        p.add_argument("--min-split", type=int, help="minimum node size to split")
        p.add_argument("--max-features", type=int,
                       help="candidate features per split (default ceil(sqrt(F)))")
    if outputs:
        p.add_argument("--outdir", help="output directory (default .)")
        p.add_argument("--formats", help="report formats, e.g. csv,json,markdown")


def _add_cascade_flags(p):
    p.add_argument("--stages", type=int, help="number of cascade stages (default 6)")
    p.add_argument("--theta", type=float, help="uniform exit threshold (default 0.80)")
    p.add_argument("--theta-mode", choices=("uniform", "increasing"))
    p.add_argument("--thetas", help="per-stage thresholds, comma-separated")
    p.add_argument("--weak", action="store_const", const=True,
                   help="enable double-weak exits")
    p.add_argument("--masks", action="store_const", const=True,
                   help="drop air_temp from the first three stages")
    p.add_argument("--weak-pairing", choices=("previous", "current"))
    p.add_argument("--adjusted", action="store_true",
                   help="shorthand: increasing thetas + weak exits + feature masks")


def build_parser() -> _Parser:
    parser = _Parser(prog="seaqual",
                     description="Cascade random-forest screening of bathing-water quality")
    parser.add_argument("--version", action="version", version=f"seaqual {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate, and summarize a dataset CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--remove-outliers", action="store_true")
    p.add_argument("--outdir")
    _add_common(p)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a calibrated synthetic dataset CSV")
    p.add_argument("--out", help="output CSV path (default OUTDIR/synthetic.csv)")
    p.add_argument("--outdir")
    _add_common(p)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("split", help="emit train.csv and test.csv")
    _add_common(p, data=True, split=True)
    p.add_argument("--outdir")
    p.set_defaults(fn=_cmd_split)

    p = sub.add_parser("train-single", help="fit one forest at a limit and serialize it")
    _add_common(p, data=True, model=True)
    p.add_argument("--limit", type=float, help="classification limit (default 250)")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(fn=_cmd_train_single)

    p = sub.add_parser("train-cascade", help="fit the staged cascade and serialize it")
    _add_common(p, data=True, model=True)
    _add_cascade_flags(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(fn=_cmd_train_cascade)

    p = sub.add_parser("classify", help="apply a serialized model to a dataset CSV")
    _add_common(p, data=True)
    p.add_argument("--model", required=True)
    p.add_argument("--theta", type=float,
                   help="re-threshold a cascade model (uniform) before classifying")
    p.add_argument("--out", required=True, help="verdicts CSV path")
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("evaluate", help="run the multi-seed experiment protocol")
    _add_common(p, data=True, split=True, model=True, outputs=True)
    _add_cascade_flags(p)
    p.add_argument("--model-kind", choices=("single", "cascade"))
    p.add_argument("--limit", type=float)
    p.add_argument("--n-runs", type=int)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("sweep", help="accuracy/TP curve over classification limits")
    _add_common(p, data=True, split=True, model=True, outputs=True)
    p.add_argument("--limits", help="comma-separated limits; omit to span p5..median")
    p.add_argument("--sweep-points", type=int, help="auto-limit count (default 7)")
    p.add_argument("--n-runs", type=int)
    p.set_defaults(fn=_cmd_sweep)

    return parser


def _set_threads(n: int) -> None:
    import numba
    avail = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(n, avail)))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "threads", None):
            _set_threads(args.threads)
        return args.fn(args)
    except SeaqualError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
