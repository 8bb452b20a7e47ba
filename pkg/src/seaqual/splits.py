"""Train/test partitioning strategies, dataset thinning, station groups.

The uniform split is the workhorse: records are sorted by E. coli value
and every k-th one goes to the test set, so both halves keep the same
fraction of high-concentration records.  Temporal and spatial splits
hold out a calendar year or a station.  Random shuffles are deliberately
not offered -- with so few above-limit records they make accuracy a
lottery.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .dataio import Dataset, Measurement
from .errors import ConfigError, ValidationError

log = logging.getLogger(__name__)

SPLIT_KINDS = ("uniform", "temporal", "spatial")


@dataclass(frozen=True)
class SplitSpec:
    """One train/test partitioning rule; only the fields of its kind are set."""

    kind: str
    k: int | None = None
    offset: int | None = None
    year: int | None = None
    station: str | None = None

    def __post_init__(self):
        if self.kind not in SPLIT_KINDS:
            raise ConfigError(f"unknown split kind {self.kind!r}; expected one of {SPLIT_KINDS}")
        want = {
            "uniform": ("k", "offset"),
            "temporal": ("year",),
            "spatial": ("station",),
        }[self.kind]
        for name in ("k", "offset", "year", "station"):
            val = getattr(self, name)
            if name in want and val is None:
                raise ConfigError(f"{self.kind} split requires {name}")
            if name not in want and val is not None:
                raise ConfigError(f"{self.kind} split does not take {name}")
        if self.kind == "uniform":
            if self.k < 2:
                raise ConfigError(f"uniform split stride must be >= 2, got {self.k}")
            if not 0 <= self.offset < self.k:
                raise ConfigError(f"uniform split offset must be in [0, {self.k}), got {self.offset}")

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        """Parse flag syntax like ``uniform:k=5,offset=4`` or ``temporal:year=2019``."""
        kind, _, rest = text.partition(":")
        kwargs = {}
        if rest:
            for part in rest.split(","):
                key, eq, val = part.partition("=")
                if not eq:
                    raise ConfigError(f"bad split argument {part!r} in {text!r}")
                kwargs[key.strip()] = val.strip()
        try:
            if kind == "uniform":
                return cls("uniform", k=int(kwargs.pop("k", 5)), offset=int(kwargs.pop("offset")),
                           **kwargs)
            if kind == "temporal":
                return cls("temporal", year=int(kwargs.pop("year")), **kwargs)
            if kind == "spatial":
                return cls("spatial", station=kwargs.pop("station"), **kwargs)
        except KeyError as e:
            raise ConfigError(f"split {text!r} is missing {e.args[0]}") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad split spec {text!r}: {e}") from None
        raise ConfigError(f"unknown split kind {kind!r}; expected one of {SPLIT_KINDS}")

    def apply(self, d: Dataset) -> tuple[Dataset, Dataset]:
        if self.kind == "uniform":
            return uniform_split(d, self.k, self.offset)
        if self.kind == "temporal":
            return temporal_split(d, self.year)
        return spatial_split(d, self.station)

    def describe(self) -> str:
        if self.kind == "uniform":
            return f"uniform:k={self.k},offset={self.offset}"
        if self.kind == "temporal":
            return f"temporal:year={self.year}"
        return f"spatial:station={self.station}"


# The two uniform phases used throughout the experiments.
SET1 = SplitSpec("uniform", k=5, offset=4)
SET2 = SplitSpec("uniform", k=5, offset=2)


def _sorted_by_ecoli(records) -> list[Measurement]:
    return sorted(records, key=lambda r: (r.ecoli, r.id))


def uniform_split(d: Dataset, k: int = 5, offset: int = 4) -> tuple[Dataset, Dataset]:
    """Stride split of the ecoli-sorted records: sorted index i tests iff i % k == offset."""
    if k < 2:
        raise ConfigError(f"uniform split stride must be >= 2, got {k}")
    if not 0 <= offset < k:
        raise ConfigError(f"uniform split offset must be in [0, {k}), got {offset}")
    if not d.records:
        raise ValidationError("cannot split an empty dataset")
    srt = _sorted_by_ecoli(d.records)
    test = tuple(r for i, r in enumerate(srt) if i % k == offset)
    train = tuple(r for i, r in enumerate(srt) if i % k != offset)
    return Dataset(train, d.provenance), Dataset(test, d.provenance)


def temporal_split(d: Dataset, year: int) -> tuple[Dataset, Dataset]:
    test = tuple(r for r in d.records if r.timestamp.year == year)
    train = tuple(r for r in d.records if r.timestamp.year != year)
    if not test:
        raise ValidationError(f"temporal split: no records in year {year}")
    if not train:
        raise ValidationError(f"temporal split: all records fall in year {year}, training set empty")
    return Dataset(train, d.provenance), Dataset(test, d.provenance)


def spatial_split(d: Dataset, station: str) -> tuple[Dataset, Dataset]:
    if station not in {r.station for r in d.records}:
        raise ConfigError(f"spatial split: station {station!r} not present in dataset")
    test = tuple(r for r in d.records if r.station == station)
    train = tuple(r for r in d.records if r.station != station)
    if not train:
        raise ValidationError(f"spatial split: {station} is the only station, training set empty")
    return Dataset(train, d.provenance), Dataset(test, d.provenance)


def thin(d: Dataset, target_size: int) -> Dataset:
    """Shrink a dataset to target_size by striking every n-th ecoli-sorted record.

    Each pass removes every n-th record with n = ceil(size / (size - target)),
    which can never overshoot; passes repeat until the target is reached
    exactly.  Striding over the sorted sequence keeps the concentration
    distribution's shape.
    """
    if not 0 < target_size <= len(d):
        raise ValidationError(
            f"thin target must be in [1, {len(d)}], got {target_size}"
        )
    kept = _sorted_by_ecoli(d.records)
    while len(kept) > target_size:
        n = math.ceil(len(kept) / (len(kept) - target_size))
        kept = [r for i, r in enumerate(kept) if (i + 1) % n != 0]
    return Dataset(tuple(kept), d.provenance)


@dataclass(frozen=True)
class StationGroup:
    """Named station subset; stations=None means no filtering."""

    name: str
    stations: frozenset[str] | None

    def __post_init__(self):
        if self.stations is not None and not self.stations:
            raise ConfigError(f"station group {self.name!r} must not be empty")


LOW_GROUP = StationGroup("LOW", frozenset({"BRH", "KH", "KBW", "KBE", "KVN"}))
HIGH_GROUP = StationGroup("HIGH", frozenset({"PNI", "KW", "KE", "3M"}))
ALL_GROUP = StationGroup("ALL", None)
GROUPS = {g.name: g for g in (ALL_GROUP, LOW_GROUP, HIGH_GROUP)}


def select_group(d: Dataset, group: StationGroup) -> Dataset:
    if group.stations is None:
        return d
    kept = tuple(r for r in d.records if r.station in group.stations)
    if not kept:
        raise ValidationError(f"station group {group.name!r} matches no records")
    return Dataset(kept, d.provenance)
