"""From-scratch random-forest binary classifier.

CART trees with Gini impurity, bootstrap aggregation, leaf-fraction
probability estimates, and mean-decrease-impurity feature importance.
The numeric work happens in _kernels; this module owns parameter
validation, seed derivation, packing, and serialization.

Probability semantics: predict_proba returns the mean over trees of the
leaf's BELOW fraction, so an 800-tree forest yields a smooth certainty
rather than a quantized vote share.  A probability of exactly 0.5
classifies ABOVE (conservative toward pollution).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import _kernels
from .dataio import ABOVE, BELOW, LabeledDataset
from .errors import ConfigError, ValidationError
from .rng import derive_seed

log = logging.getLogger(__name__)

FOREST_SCHEMA = "seaqual-forest/1"


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_depth: int = 10
    min_samples_split: int = 6
    max_features: int | None = None  # None resolves to ceil(sqrt(F)) at fit time
    seed: int = 0
    bootstrap: bool = True  # test hook for oracle comparisons; keep on otherwise

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ConfigError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError(f"max_features must be >= 1, got {self.max_features}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")


@dataclass(frozen=True, eq=False)
class Forest:
    """Trained ensemble; trees live in flat packed arrays.

    feature[j] == -1 marks a leaf; child ids are tree-local, tree t
    occupying packed indices [offsets[t], offsets[t+1]).
    """

    params: ForestParams
    feature_names: tuple[str, ...]
    seeds: np.ndarray      # (T,) uint64, per-tree RNG seeds
    feature: np.ndarray    # (total_nodes,) int32
    threshold: np.ndarray  # (total_nodes,) float64
    left: np.ndarray       # (total_nodes,) int32
    right: np.ndarray      # (total_nodes,) int32
    n_below: np.ndarray    # (total_nodes,) int64
    n_above: np.ndarray    # (total_nodes,) int64
    offsets: np.ndarray    # (T+1,) int64

    @property
    def n_trees(self) -> int:
        return len(self.seeds)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def tree_nodes(self, t: int) -> slice:
        return slice(int(self.offsets[t]), int(self.offsets[t + 1]))


def gini_impurity(counts) -> float:
    """Gini impurity 1 - p_below^2 - p_above^2 of a (n_below, n_above) node."""
    nb, na = counts
    if nb < 0 or na < 0:
        raise ValidationError(f"class counts must be non-negative, got {counts}")
    n = nb + na
    if n < 1:
        raise ValidationError("gini impurity of an empty node is undefined")
    pb = nb / n
    pa = na / n
    return 1.0 - pb * pb - pa * pa


def _sorted_indices(X: np.ndarray) -> np.ndarray:
    n, F = X.shape
    out = np.empty((F, n), dtype=np.int32)
    for f in range(F):
        out[f] = np.argsort(X[:, f], kind="stable")
    return out


def best_split(X, y, candidate_features=None, sample_weight=None):
    """Exhaustive best (feature, threshold, gain) over candidate features.

    Thresholds are midpoints between consecutive distinct values; the
    split maximizing the weighted Gini decrease wins, ties going to the
    lowest feature index and then the lowest threshold.  Returns None
    when no split has positive gain.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("best_split expects a 2-d sample matrix")
    n, F = X.shape
    if n < 2:
        raise ValidationError(f"best_split needs at least 2 samples, got {n}")
    y = np.ascontiguousarray(y, dtype=np.uint8)
    if y.shape != (n,):
        raise ValidationError("labels must align with sample rows")
    if sample_weight is None:
        w = np.ones(n, dtype=np.int64)
    else:
        w = np.ascontiguousarray(sample_weight, dtype=np.int64)
        if w.shape != (n,) or (w < 0).any():
            raise ValidationError("sample_weight must be non-negative, one per row")
    if candidate_features is None:
        cand = np.arange(F, dtype=np.int32)
    else:
        cand = np.array(sorted(set(int(c) for c in candidate_features)), dtype=np.int32)
        if len(cand) == 0 or cand[0] < 0 or cand[-1] >= F:
            raise ConfigError(f"candidate features out of range for {F} features")
    f, thr, gain, _, _ = _kernels.scan_best_split(X, y, w, _sorted_indices(X), cand)
    if f < 0:
        return None
    return int(f), float(thr), float(gain)


def resolve_max_features(params: ForestParams, n_features: int) -> int:
    mf = params.max_features
    if mf is None:
        mf = math.ceil(math.sqrt(n_features))
    if not 1 <= mf <= n_features:
        raise ConfigError(
            f"max_features must be in [1, {n_features}], got {mf}"
        )
    return mf


def fit_forest(data: LabeledDataset, params: ForestParams) -> Forest:
    """Train a forest; bit-deterministic given (data, params).

    Each tree consumes its own splitmix64 stream seeded by
    derive_seed(params.seed, t), so trees may be built in any order or
    in parallel without changing the result.
    """
    X = np.ascontiguousarray(data.X, dtype=np.float64)
    y = np.ascontiguousarray(data.labels, dtype=np.uint8)
    n, F = X.shape
    if n == 0:
        raise ValidationError("cannot fit a forest on an empty dataset")
    if len(data.feature_names) != F:
        raise ValidationError("feature_names out of step with the feature matrix")
    mf = resolve_max_features(params, F)
    if data.n_below == 0 or data.n_above == 0:
        log.warning("training set has a single class (n_below=%d, n_above=%d); "
                    "trees will be bare leaves", data.n_below, data.n_above)

    T = params.n_estimators
    seeds = np.array([derive_seed(params.seed, t) for t in range(T)], dtype=np.uint64)
    sortidx = _sorted_indices(X)

    # leaves hold >= 1 bootstrap sample, so 2n-1 bounds the node count;
    # a depth-limited tree is also bounded by the full binary tree
    max_nodes = 2 * n - 1
    if params.max_depth < 40:
        max_nodes = min(max_nodes, 2 ** (params.max_depth + 1) - 1)

    slab_f = np.empty(T * max_nodes, dtype=np.int32)
    slab_t = np.empty(T * max_nodes, dtype=np.float64)
    slab_l = np.empty(T * max_nodes, dtype=np.int32)
    slab_r = np.empty(T * max_nodes, dtype=np.int32)
    slab_nb = np.empty(T * max_nodes, dtype=np.int64)
    slab_na = np.empty(T * max_nodes, dtype=np.int64)
    counts = np.empty(T, dtype=np.int64)

    _kernels.build_forest(X, y, sortidx, seeds,
                          params.max_depth, params.min_samples_split, mf,
                          params.bootstrap,
                          slab_f, slab_t, slab_l, slab_r, slab_nb, slab_na,
                          counts, max_nodes)

    offsets = np.zeros(T + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    feature = np.empty(total, dtype=np.int32)
    threshold = np.empty(total, dtype=np.float64)
    left = np.empty(total, dtype=np.int32)
    right = np.empty(total, dtype=np.int32)
    nb_arr = np.empty(total, dtype=np.int64)
    na_arr = np.empty(total, dtype=np.int64)
    for t in range(T):
        src = slice(t * max_nodes, t * max_nodes + int(counts[t]))
        dst = slice(int(offsets[t]), int(offsets[t + 1]))
        feature[dst] = slab_f[src]
        threshold[dst] = slab_t[src]
        left[dst] = slab_l[src]
        right[dst] = slab_r[src]
        nb_arr[dst] = slab_nb[src]
        na_arr[dst] = slab_na[src]

    for arr in (seeds, feature, threshold, left, right, nb_arr, na_arr, offsets):
        arr.setflags(write=False)
    return Forest(params=replace(params, max_features=mf),
                  feature_names=tuple(data.feature_names),
                  seeds=seeds, feature=feature, threshold=threshold,
                  left=left, right=right, n_below=nb_arr, n_above=na_arr,
                  offsets=offsets)


def _as_query_matrix(f: Forest, X) -> np.ndarray:
    Xq = np.ascontiguousarray(X, dtype=np.float64)
    if Xq.ndim == 1:
        Xq = Xq.reshape(1, -1)
    if Xq.ndim != 2 or Xq.shape[1] != f.n_features:
        raise ValidationError(
            f"feature vector has arity {Xq.shape[-1] if Xq.ndim else 0}, "
            f"forest expects {f.n_features}"
        )
    return Xq


def predict_proba_batch(f: Forest, X) -> np.ndarray:
    Xq = _as_query_matrix(f, X)
    out = np.empty(Xq.shape[0], dtype=np.float64)
    _kernels.predict_forest(Xq, f.feature, f.threshold, f.left, f.right,
                            f.n_below, f.n_above, f.offsets, out)
    return out


def predict_proba(f: Forest, x) -> float:
    """Mean over trees of the BELOW fraction at the leaf x routes to."""
    return float(predict_proba_batch(f, np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])


def predict_class_batch(f: Forest, X) -> np.ndarray:
    p = predict_proba_batch(f, X)
    return np.where(p > 0.5, BELOW, ABOVE).astype(np.uint8)


def predict_class(f: Forest, x) -> int:
    return BELOW if predict_proba(f, x) > 0.5 else ABOVE


def feature_importance(f: Forest) -> np.ndarray:
    """Per-feature MDI weights, normalized to sum 1 (zero vector if no splits)."""
    raw = _kernels.forest_importance(f.feature, f.threshold, f.left, f.right,
                                     f.n_below, f.n_above, f.offsets, f.n_features)
    total = raw.sum()
    if total > 0.0:
        raw = raw / total
    raw.setflags(write=False)
    return raw


def forest_to_dict(f: Forest) -> dict:
    trees = []
    for t in range(f.n_trees):
        s = f.tree_nodes(t)
        trees.append({
            "feature": [int(v) for v in f.feature[s]],
            "threshold": [float(v) for v in f.threshold[s]],
            "left": [int(v) for v in f.left[s]],
            "right": [int(v) for v in f.right[s]],
            "n_below": [int(v) for v in f.n_below[s]],
            "n_above": [int(v) for v in f.n_above[s]],
        })
    return {
        "schema": FOREST_SCHEMA,
        "params": asdict(f.params),
        "feature_names": list(f.feature_names),
        "seeds": [int(s) for s in f.seeds],
        "trees": trees,
    }


def forest_from_dict(doc: dict) -> Forest:
    if doc.get("schema") != FOREST_SCHEMA:
        raise ValidationError(f"unsupported forest schema {doc.get('schema')!r}")
    params = ForestParams(**doc["params"])
    names = tuple(doc["feature_names"])
    trees = doc["trees"]
    if len(trees) != params.n_estimators:
        raise ValidationError("tree count does not match n_estimators")
    seeds = np.array(doc["seeds"], dtype=np.uint64)
    counts = [len(t["feature"]) for t in trees]
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    feature = np.empty(total, dtype=np.int32)
    threshold = np.empty(total, dtype=np.float64)
    left = np.empty(total, dtype=np.int32)
    right = np.empty(total, dtype=np.int32)
    nb_arr = np.empty(total, dtype=np.int64)
    na_arr = np.empty(total, dtype=np.int64)
    for t, tree in enumerate(trees):
        s = slice(int(offsets[t]), int(offsets[t + 1]))
        feature[s] = tree["feature"]
        threshold[s] = tree["threshold"]
        left[s] = tree["left"]
        right[s] = tree["right"]
        nb_arr[s] = tree["n_below"]
        na_arr[s] = tree["n_above"]
    if total and (feature.max() >= len(names) or feature.min() < -1):
        raise ValidationError("tree references an out-of-range feature index")
    for arr in (seeds, feature, threshold, left, right, nb_arr, na_arr, offsets):
        arr.setflags(write=False)
    return Forest(params=params, feature_names=names, seeds=seeds,
                  feature=feature, threshold=threshold, left=left, right=right,
                  n_below=nb_arr, n_above=na_arr, offsets=offsets)


def dumps_forest(f: Forest) -> str:
    return json.dumps(forest_to_dict(f), sort_keys=True, separators=(",", ":"))


def loads_forest(text: str) -> Forest:
    return forest_from_dict(json.loads(text))
