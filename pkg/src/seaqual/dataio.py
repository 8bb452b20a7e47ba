"""Measurement data model, CSV ingestion/serialization, and station stats.

One sampling event is a `Measurement`; an ordered collection is a
`Dataset`.  Labeling a dataset at a concentration limit produces a
`LabeledDataset` carrying the binary targets and the feature matrix the
classifiers consume.  All types are immutable after construction.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from . import stats

log = logging.getLogger(__name__)

COLUMNS = (
    "id", "station", "timestamp", "salinity", "water_temp", "air_temp",
    "ghi", "ghi_cum4h", "rain_4_7d", "rain_7_14d", "ecoli", "outlier",
)
CSV_HEADER = ",".join(COLUMNS)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

# Numeric fields usable as model inputs.  Rainfall sums are parsed and
# stored but not part of the default feature set.
FEATURE_FIELDS = (
    "salinity", "water_temp", "air_temp", "ghi", "ghi_cum4h",
    "rain_4_7d", "rain_7_14d",
)
DEFAULT_FEATURES = ("salinity", "water_temp", "air_temp", "ghi", "ghi_cum4h")
RAIN_FIELDS = ("rain_4_7d", "rain_7_14d")

# Class codes.  BELOW means ecoli <= limit (the "excellent" side).
BELOW = 0
ABOVE = 1


@dataclass(frozen=True)
class Measurement:
    id: str
    station: str
    timestamp: datetime
    salinity: float
    water_temp: float
    air_temp: float
    ghi: float
    ghi_cum4h: float
    rain_4_7d: float
    rain_7_14d: float
    ecoli: int
    outlier: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if not self.station:
            raise ValidationError(f"record {self.id}: station code must be non-empty")
        if not isinstance(self.timestamp, datetime) or self.timestamp.tzinfo is None:
            raise ValidationError(f"record {self.id}: timestamp must be a tz-aware datetime")
        if not isinstance(self.ecoli, int) or isinstance(self.ecoli, bool):
            raise ValidationError(f"record {self.id}: ecoli must be an integer count")
        if self.ecoli < 0:
            raise ValidationError(f"record {self.id}: ecoli must be >= 0, got {self.ecoli}")
        if not 0.0 <= self.salinity <= 45.0:
            raise ValidationError(
                f"record {self.id}: salinity must be in [0, 45], got {self.salinity}"
            )
        for name in ("ghi", "ghi_cum4h", "rain_4_7d", "rain_7_14d"):
            if getattr(self, name) < 0:
                raise ValidationError(
                    f"record {self.id}: {name} must be >= 0, got {getattr(self, name)}"
                )


@dataclass(frozen=True)
class Dataset:
    records: tuple[Measurement, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise ValidationError(f"duplicate record id {r.id!r}")
            seen.add(r.id)

    def __len__(self) -> int:
        return len(self.records)

    def ecoli_values(self) -> np.ndarray:
        return np.array([r.ecoli for r in self.records], dtype=np.int64)

    def stations(self) -> tuple[str, ...]:
        return tuple(sorted({r.station for r in self.records}))

    def years(self) -> tuple[int, ...]:
        return tuple(sorted({r.timestamp.year for r in self.records}))


@dataclass(frozen=True)
class StationStats:
    station: str
    n: int
    ecoli_mean: float
    ecoli_median: float
    salinity_mean: float
    salinity_median: float


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A dataset plus binary targets at a concentration limit.

    labels[i] is BELOW iff records[i].ecoli <= limit.  X holds the
    feature matrix restricted to feature_names, row-aligned with
    records; both arrays are read-only.
    """

    base: Dataset
    limit: float
    labels: np.ndarray
    feature_names: tuple[str, ...]
    X: np.ndarray

    @property
    def n_below(self) -> int:
        return int(np.sum(self.labels == BELOW))

    @property
    def n_above(self) -> int:
        return int(np.sum(self.labels == ABOVE))

    def __len__(self) -> int:
        return len(self.base)


def parse_dataset(source, provenance: str = "") -> Dataset:
    """Parse the CSV interchange format into a Dataset.

    `source` is a string or a text file object.  The header must match
    CSV_HEADER exactly.  Empty rainfall cells default to 0 mm (counted
    and logged); any other empty or malformed cell is an error naming
    the line and column.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input: missing CSV header") from None
    if header != list(COLUMNS):
        raise ParseError(
            f"line 1: bad header {','.join(header)!r}; expected {CSV_HEADER!r}"
        )

    records = []
    missing_rain = 0
    first_missing_line = None
    for ln, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise ParseError(f"line {ln}: expected {len(COLUMNS)} cells, got {len(row)}")
        cells = dict(zip(COLUMNS, row))

        def _float(col: str) -> float:
            raw = cells[col]
            if raw == "" and col in RAIN_FIELDS:
                nonlocal missing_rain, first_missing_line
                missing_rain += 1
                if first_missing_line is None:
                    first_missing_line = ln
                return 0.0
            try:
                return float(raw)
            except ValueError:
                raise ParseError(f"line {ln}, column {col}: not a number: {raw!r}") from None

        try:
            ts = datetime.strptime(cells["timestamp"], TIMESTAMP_FORMAT)
        except ValueError:
            raise ParseError(
                f"line {ln}, column timestamp: expected YYYY-MM-DDThh:mm:ssZ, "
                f"got {cells['timestamp']!r}"
            ) from None
        ts = ts.replace(tzinfo=timezone.utc)

        try:
            ecoli = int(cells["ecoli"])
        except ValueError:
            raise ParseError(
                f"line {ln}, column ecoli: not an integer: {cells['ecoli']!r}"
            ) from None

        if cells["outlier"] not in ("0", "1"):
            raise ParseError(
                f"line {ln}, column outlier: expected 0 or 1, got {cells['outlier']!r}"
            )

        try:
            records.append(Measurement(
                id=cells["id"],
                station=cells["station"],
                timestamp=ts,
                salinity=_float("salinity"),
                water_temp=_float("water_temp"),
                air_temp=_float("air_temp"),
                ghi=_float("ghi"),
                ghi_cum4h=_float("ghi_cum4h"),
                rain_4_7d=_float("rain_4_7d"),
                rain_7_14d=_float("rain_7_14d"),
                ecoli=ecoli,
                outlier=cells["outlier"] == "1",
            ))
        except ValidationError as e:
            raise ValidationError(f"line {ln}: {e}") from None

    if missing_rain:
        log.warning(
            "%d missing rainfall cell(s) defaulted to 0 mm (first at line %d)",
            missing_rain, first_missing_line,
        )
    return Dataset(tuple(records), provenance=provenance)


def _fmt_num(x: float) -> str:
    # shortest repr that round-trips; integers stay integral-looking
    return repr(float(x))


def serialize_dataset(d: Dataset) -> str:
    lines = [CSV_HEADER]
    for r in d.records:
        lines.append(",".join((
            r.id,
            r.station,
            r.timestamp.strftime(TIMESTAMP_FORMAT),
            _fmt_num(r.salinity),
            _fmt_num(r.water_temp),
            _fmt_num(r.air_temp),
            _fmt_num(r.ghi),
            _fmt_num(r.ghi_cum4h),
            _fmt_num(r.rain_4_7d),
            _fmt_num(r.rain_7_14d),
            str(r.ecoli),
            "1" if r.outlier else "0",
        )))
    return "\n".join(lines) + "\n"


def read_dataset(path, provenance: str | None = None) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh, provenance=provenance if provenance is not None else str(path))


def write_dataset(d: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_dataset(d))


def remove_outliers(d: Dataset) -> Dataset:
    kept = tuple(r for r in d.records if not r.outlier)
    return Dataset(kept, provenance=d.provenance)


def station_stats(d: Dataset) -> list[StationStats]:
    by_station: dict[str, list[Measurement]] = {}
    for r in d.records:
        by_station.setdefault(r.station, []).append(r)
    out = []
    for code in sorted(by_station):
        rs = by_station[code]
        ecoli = np.array([r.ecoli for r in rs], dtype=np.float64)
        sal = np.array([r.salinity for r in rs], dtype=np.float64)
        out.append(StationStats(
            station=code,
            n=len(rs),
            ecoli_mean=float(ecoli.mean()),
            ecoli_median=stats.median(ecoli),
            salinity_mean=float(sal.mean()),
            salinity_median=stats.median(sal),
        ))
    return out


def label(d: Dataset, limit: float, features=DEFAULT_FEATURES) -> LabeledDataset:
    """Assign binary targets at `limit` and extract the feature matrix.

    BELOW iff ecoli <= limit (a tie sits on the excellent side).  The
    limit may be fractional: cascade stages relabel at interpolated
    medians.
    """
    if limit <= 0:
        raise ValidationError(f"classification limit must be > 0, got {limit}")
    features = tuple(features)
    for f in features:
        if f not in FEATURE_FIELDS:
            raise ConfigError(f"unknown feature {f!r}; available: {', '.join(FEATURE_FIELDS)}")
    if len(set(features)) != len(features):
        raise ConfigError(f"duplicate feature names in {features}")

    n = len(d.records)
    labels = np.empty(n, dtype=np.uint8)
    X = np.empty((n, len(features)), dtype=np.float64)
    for i, r in enumerate(d.records):
        labels[i] = BELOW if r.ecoli <= limit else ABOVE
        for j, f in enumerate(features):
            X[i, j] = getattr(r, f)
    labels.setflags(write=False)
    X.setflags(write=False)
    return LabeledDataset(base=d, limit=limit, labels=labels, feature_names=features, X=X)
