"""Cascade model: staged forests over a shrinking, relabeled training set.

Stage 1 trains on the full training set with targets split at its
median E. coli value.  Each later stage drops the records below the
previous stage's 25th percentile and relabels at the new median, so
every stage is a balanced problem whose decision boundary sits at a
higher concentration.  At prediction time a measurement walks the
stages; a stage may declare it EXCELLENT outright (certainty >= theta)
or together with the previous stage under the double-weak rule; a
measurement no stage vouches for stays SUSPECT.

The regulatory limit never enters training or classification -- it only
scores reports, which is the point: the cascade is a data filter, not a
limit classifier.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import stats
from .dataio import BELOW, DEFAULT_FEATURES, Dataset, Measurement, label
from .errors import ConfigError, ValidationError
from .forest import (Forest, ForestParams, fit_forest, forest_from_dict,
                     forest_to_dict, predict_proba_batch)
from .rng import derive_seed

log = logging.getLogger(__name__)

CASCADE_SCHEMA = "seaqual-cascade/1"

# Forest parameters used for every stage unless overridden.
DEFAULT_CASCADE_PARAMS = ForestParams(n_estimators=800, max_depth=10, min_samples_split=6)

DEFAULT_N_STAGES = 6
MIN_STAGE_SIZE = 100
TRIM_PERCENTILE = 25.0

DEFAULT_INCREASING_THETAS = (0.65, 0.70, 0.75, 0.80, 0.80, 0.80)
DEFAULT_WEAK_THRESHOLDS = (None, 0.70, 0.70, 0.75, 0.75, 0.75)

VERDICT_EXCELLENT = "excellent"
VERDICT_SUSPECT = "suspect"
RULE_STRONG = "strong"
RULE_DOUBLE_WEAK = "double_weak"


def default_feature_masks(n_stages: int, features=DEFAULT_FEATURES,
                          drop: str = "air_temp", until_stage: int = 3):
    """Per-stage feature lists dropping one feature in the early stages.

    Air temperature correlates with E. coli only once concentrations are
    already high, so by default the first three stages exclude it.
    """
    reduced = tuple(f for f in features if f != drop)
    if len(reduced) == len(features):
        raise ConfigError(f"feature {drop!r} is not among {features}")
    return tuple(reduced if k <= until_stage else tuple(features)
                 for k in range(1, n_stages + 1))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Exit thresholds and optional stage adjustments.

    mode "uniform" applies uniform_theta at every stage; "increasing"
    uses increasing_thetas[k-1].  weak_thresholds enables the
    double-weak rule (None entries disable it at that stage).
    weak_pairing decides which weak value the previous stage's
    probability is compared against: "previous" uses w_{k-1} (stage 1
    borrowing stage 2's value), "current" compares both against w_k.
    strict_greater switches the certainty comparison from >= to >.
    """

    mode: str = "uniform"
    uniform_theta: float = 0.80
    increasing_thetas: tuple = DEFAULT_INCREASING_THETAS
    weak_thresholds: tuple | None = None
    feature_masks: tuple | None = None
    weak_pairing: str = "previous"
    strict_greater: bool = False

    def __post_init__(self):
        if self.mode not in ("uniform", "increasing"):
            raise ConfigError(f"threshold mode must be uniform or increasing, got {self.mode!r}")
        if self.weak_pairing not in ("previous", "current"):
            raise ConfigError(f"weak_pairing must be previous or current, got {self.weak_pairing!r}")
        object.__setattr__(self, "increasing_thetas", tuple(self.increasing_thetas))
        if self.weak_thresholds is not None:
            object.__setattr__(self, "weak_thresholds", tuple(self.weak_thresholds))
        if self.feature_masks is not None:
            object.__setattr__(self, "feature_masks",
                               tuple(tuple(m) for m in self.feature_masks))

    def theta_for(self, k: int) -> float:
        if self.mode == "uniform":
            return self.uniform_theta
        if k > len(self.increasing_thetas):
            raise ConfigError(
                f"increasing_thetas has {len(self.increasing_thetas)} entries, stage {k} requested"
            )
        return self.increasing_thetas[k - 1]

    def weak_for(self, k: int):
        if self.weak_thresholds is None:
            return None
        if k > len(self.weak_thresholds):
            raise ConfigError(
                f"weak_thresholds has {len(self.weak_thresholds)} entries, stage {k} requested"
            )
        return self.weak_thresholds[k - 1]

    def features_for(self, k: int, default):
        if self.feature_masks is None:
            return tuple(default)
        if k > len(self.feature_masks):
            raise ConfigError(
                f"feature_masks has {len(self.feature_masks)} entries, stage {k} requested"
            )
        return self.feature_masks[k - 1]

    def passes(self, p: float, threshold: float) -> bool:
        return p > threshold if self.strict_greater else p >= threshold


# The fully-adjusted policy: increasing thetas, double-weak exits, and
# early stages without air temperature.
def adjusted_policy(n_stages: int = DEFAULT_N_STAGES, features=DEFAULT_FEATURES) -> ThresholdPolicy:
    return ThresholdPolicy(mode="increasing",
                           weak_thresholds=DEFAULT_WEAK_THRESHOLDS[:n_stages],
                           feature_masks=default_feature_masks(n_stages, features))


@dataclass(frozen=True, eq=False)
class StageSpec:
    index: int                    # 1-based stage number
    train_lower_bound: float      # minimum ecoli admitted to this stage
    median: float                 # relabeling threshold m_k
    p25: float                    # trim point handed to the next stage
    theta: float
    weak: float | None
    features: tuple
    forest: Forest
    n_train: int

    def __post_init__(self):
        if self.weak is not None and self.weak > self.theta:
            raise ConfigError(
                f"stage {self.index}: weak threshold {self.weak} exceeds theta {self.theta}"
            )


@dataclass(frozen=True, eq=False)
class CascadeModel:
    stages: tuple
    params: ForestParams
    policy: ThresholdPolicy

    @property
    def n_stages(self) -> int:
        return len(self.stages)


@dataclass(frozen=True)
class CascadePrediction:
    verdict: str                     # VERDICT_EXCELLENT or VERDICT_SUSPECT
    stage: int | None                # exit stage, None when suspect
    rule: str | None                 # RULE_STRONG / RULE_DOUBLE_WEAK / None
    probabilities: tuple             # p_k for exactly the stages visited


@dataclass(frozen=True)
class CascadeReport:
    limit: float
    n_test: int
    n_below: int
    n_above: int
    true_positive: int               # truly <= limit, exited EXCELLENT
    false_negative: int              # truly  > limit, exited EXCELLENT
    suspects: int
    tp_rate: float | None            # over truly-below records
    fn_rate: float | None            # over truly-above records
    exits_by_stage: tuple
    tp_by_stage: tuple
    fn_by_stage: tuple
    n_strong: int
    n_weak: int


def build_stages(train: Dataset, n_stages: int,
                 trim_percentile: float = TRIM_PERCENTILE,
                 min_stage_size: int = MIN_STAGE_SIZE):
    """Iterative trim-and-relabel schedule.

    Returns a list of (subset, median, p25) triples.  Stage k+1 keeps
    the records of stage k with ecoli >= the stage-k 25th percentile
    (values exactly at the percentile stay).  Construction stops early,
    with a warning, if the next subset would fall below min_stage_size
    or fail to shrink (percentile buried in ties).
    """
    if not train.records:
        raise ValidationError("cannot build cascade stages from an empty training set")
    if n_stages < 1:
        raise ConfigError(f"n_stages must be >= 1, got {n_stages}")
    if not 0.0 < trim_percentile < 100.0:
        raise ConfigError(f"trim percentile must be in (0, 100), got {trim_percentile}")

    out = []
    current = train.records
    for k in range(1, n_stages + 1):
        ecoli = np.array([r.ecoli for r in current], dtype=np.float64)
        m = stats.median(ecoli)
        p = stats.quantile(ecoli, trim_percentile / 100.0)
        out.append((Dataset(current, train.provenance), m, p))
        if k == n_stages:
            break
        nxt = tuple(r for r in current if r.ecoli >= p)
        if len(nxt) < min_stage_size:
            log.warning("stage %d would have %d < %d records; stopping at %d stages",
                        k + 1, len(nxt), min_stage_size, k)
            break
        if len(nxt) == len(current):
            log.warning("trim at stage %d removed nothing (ties at the percentile); "
                        "stopping at %d stages", k + 1, k)
            break
        current = nxt
    return out


def fit_cascade(train: Dataset, params: ForestParams = DEFAULT_CASCADE_PARAMS,
                policy: ThresholdPolicy = ThresholdPolicy(),
                n_stages: int = DEFAULT_N_STAGES,
                features=DEFAULT_FEATURES,
                trim_percentile: float = TRIM_PERCENTILE,
                min_stage_size: int = MIN_STAGE_SIZE) -> CascadeModel:
    """Train one forest per stage; stage k's forest is seeded by derive(seed, k)."""
    staged = build_stages(train, n_stages, trim_percentile, min_stage_size)
    stages = []
    lower = 0.0
    for k, (subset, m, p25) in enumerate(staged, start=1):
        feats = policy.features_for(k, features)
        if m <= 0:
            raise ValidationError(
                f"stage {k} median is {m}; over half the stage's records have "
                "ecoli 0, no balanced relabeling exists"
            )
        labeled = label(subset, m, feats)
        stage_params = replace(params, seed=derive_seed(params.seed, k))
        f = fit_forest(labeled, stage_params)
        stages.append(StageSpec(index=k, train_lower_bound=lower, median=m, p25=p25,
                                theta=policy.theta_for(k), weak=policy.weak_for(k),
                                features=feats, forest=f, n_train=len(subset)))
        lower = p25
    _check_stage_shape(stages)
    return CascadeModel(stages=tuple(stages), params=params, policy=policy)


def _check_stage_shape(stages) -> None:
    for a, b in zip(stages, stages[1:]):
        if b.median < a.median:
            raise ValidationError(
                f"stage medians must be non-decreasing, got {a.median} -> {b.median}"
            )
        if b.n_train >= a.n_train:
            raise ValidationError(
                f"stage sizes must strictly decrease, got {a.n_train} -> {b.n_train}"
            )


def with_policy(model: CascadeModel, policy: ThresholdPolicy) -> CascadeModel:
    """Re-threshold a trained cascade without refitting.

    Only legal when the new policy keeps the per-stage feature sets, since
    those are baked into the trained forests.
    """
    stages = []
    for s in model.stages:
        feats = policy.features_for(s.index, s.features)
        if tuple(feats) != tuple(s.features):
            raise ConfigError(
                f"stage {s.index}: cannot change features {s.features} -> {feats} "
                "without refitting"
            )
        stages.append(replace(s, theta=policy.theta_for(s.index),
                              weak=policy.weak_for(s.index)))
    return CascadeModel(stages=tuple(stages), params=model.params, policy=policy)


def _weak_pair_threshold(model: CascadeModel, k: int):
    """The weak value the previous stage's probability must reach at stage k."""
    policy = model.policy
    if policy.weak_pairing == "current":
        return model.stages[k - 1].weak
    w_prev = model.stages[k - 2].weak
    if w_prev is None and k - 1 == 1:
        # stage 1 has no weak threshold of its own; it borrows stage 2's
        w_prev = model.stages[1].weak
    return w_prev


def classify_batch(model: CascadeModel, records) -> list[CascadePrediction]:
    """Classify measurements through the cascade (vectorized per stage)."""
    records = tuple(records)
    n = len(records)
    if n == 0:
        return []
    policy = model.policy
    n_stages = model.n_stages

    probs = np.full((n, n_stages), np.nan)
    exit_stage = np.zeros(n, dtype=np.int64)      # 0 = still suspect
    exit_rule = np.zeros(n, dtype=np.int64)       # 1 strong, 2 weak
    active = np.ones(n, dtype=bool)

    for k, stage in enumerate(model.stages, start=1):
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        try:
            Xs = np.array([[getattr(records[i], f) for f in stage.features] for i in rows],
                          dtype=np.float64)
        except AttributeError as e:
            raise ConfigError(f"stage {k} needs feature {e.name!r}, "
                              "absent from the measurement") from None
        p = predict_proba_batch(stage.forest, Xs)
        probs[rows, k - 1] = p

        strong = np.array([policy.passes(v, stage.theta) for v in p])
        weak = np.zeros(len(rows), dtype=bool)
        if k >= 2 and stage.weak is not None:
            w_pair = _weak_pair_threshold(model, k)
            if w_pair is not None:
                p_prev = probs[rows, k - 2]
                weak = (~strong
                        & np.array([policy.passes(v, stage.weak) for v in p])
                        & np.array([policy.passes(v, w_pair) for v in p_prev]))
        exited = strong | weak
        exit_stage[rows[exited]] = k
        exit_rule[rows[strong]] = 1
        exit_rule[rows[weak]] = 2
        active[rows[exited]] = False

    out = []
    for i in range(n):
        visited = int(exit_stage[i]) if exit_stage[i] > 0 else n_stages
        row = tuple(float(v) for v in probs[i, :visited])
        if exit_stage[i] > 0:
            out.append(CascadePrediction(
                verdict=VERDICT_EXCELLENT, stage=int(exit_stage[i]),
                rule=RULE_STRONG if exit_rule[i] == 1 else RULE_DOUBLE_WEAK,
                probabilities=row))
        else:
            out.append(CascadePrediction(
                verdict=VERDICT_SUSPECT, stage=None, rule=None, probabilities=row))
    return out


def classify_measurement(model: CascadeModel, x: Measurement) -> CascadePrediction:
    return classify_batch(model, (x,))[0]


def evaluate_cascade(model: CascadeModel, test: Dataset, limit: float = 250) -> CascadeReport:
    """Score the cascade's verdicts against the truth at `limit`.

    The limit plays no part in classification; it only decides which
    EXCELLENT verdicts were right (true positives) or wrong (false
    negatives).
    """
    if not test.records:
        raise ValidationError("cannot evaluate on an empty test set")
    preds = classify_batch(model, test.records)
    truly_below = np.array([r.ecoli <= limit for r in test.records])
    n = len(test.records)
    n_below = int(truly_below.sum())
    n_above = n - n_below

    tp = fn = 0
    n_strong = n_weak = 0
    exits = [0] * model.n_stages
    tp_stage = [0] * model.n_stages
    fn_stage = [0] * model.n_stages
    for i, pred in enumerate(preds):
        if pred.verdict != VERDICT_EXCELLENT:
            continue
        s = pred.stage - 1
        exits[s] += 1
        if pred.rule == RULE_STRONG:
            n_strong += 1
        else:
            n_weak += 1
        if truly_below[i]:
            tp += 1
            tp_stage[s] += 1
        else:
            fn += 1
            fn_stage[s] += 1

    return CascadeReport(
        limit=limit, n_test=n, n_below=n_below, n_above=n_above,
        true_positive=tp, false_negative=fn, suspects=n - tp - fn,
        tp_rate=tp / n_below if n_below else None,
        fn_rate=fn / n_above if n_above else None,
        exits_by_stage=tuple(exits), tp_by_stage=tuple(tp_stage),
        fn_by_stage=tuple(fn_stage), n_strong=n_strong, n_weak=n_weak)


def _policy_to_dict(p: ThresholdPolicy) -> dict:
    d = asdict(p)
    d["increasing_thetas"] = list(p.increasing_thetas)
    d["weak_thresholds"] = list(p.weak_thresholds) if p.weak_thresholds is not None else None
    d["feature_masks"] = ([list(m) for m in p.feature_masks]
                          if p.feature_masks is not None else None)
    return d


def _policy_from_dict(d: dict) -> ThresholdPolicy:
    d = dict(d)
    if d.get("weak_thresholds") is not None:
        d["weak_thresholds"] = tuple(d["weak_thresholds"])
    if d.get("feature_masks") is not None:
        d["feature_masks"] = tuple(tuple(m) for m in d["feature_masks"])
    d["increasing_thetas"] = tuple(d["increasing_thetas"])
    return ThresholdPolicy(**d)


def cascade_to_dict(m: CascadeModel) -> dict:
    return {
        "schema": CASCADE_SCHEMA,
        "params": asdict(m.params),
        "policy": _policy_to_dict(m.policy),
        "stages": [{
            "index": s.index,
            "train_lower_bound": s.train_lower_bound,
            "median": s.median,
            "p25": s.p25,
            "theta": s.theta,
            "weak": s.weak,
            "features": list(s.features),
            "n_train": s.n_train,
            "forest": forest_to_dict(s.forest),
        } for s in m.stages],
    }


def cascade_from_dict(doc: dict) -> CascadeModel:
    if doc.get("schema") != CASCADE_SCHEMA:
        raise ValidationError(f"unsupported cascade schema {doc.get('schema')!r}")
    stages = tuple(StageSpec(
        index=s["index"], train_lower_bound=s["train_lower_bound"],
        median=s["median"], p25=s["p25"], theta=s["theta"], weak=s["weak"],
        features=tuple(s["features"]), n_train=s["n_train"],
        forest=forest_from_dict(s["forest"]),
    ) for s in doc["stages"])
    return CascadeModel(stages=stages,
                        params=ForestParams(**doc["params"]),
                        policy=_policy_from_dict(doc["policy"]))


def dumps_cascade(m: CascadeModel) -> str:
    return json.dumps(cascade_to_dict(m), sort_keys=True, separators=(",", ":"))


def loads_cascade(text: str) -> CascadeModel:
    return cascade_from_dict(json.loads(text))
