"""Shared fixtures: hand-built micro-datasets and one cached synthetic set."""

from __future__ import annotations

import datetime as dt

import pytest

from seaqual.dataio import Dataset, Measurement
from seaqual.splits import uniform_split
from seaqual.synth import default_config, generate_dataset

UTC = dt.timezone.utc


def make_record(rid="r0", station="ST", when=None, ecoli=10, salinity=35.0,
                water_temp=20.0, air_temp=22.0, ghi=400.0, ghi_cum4h=1500.0,
                rain_4_7d=0.0, rain_7_14d=0.0, outlier=False):
    """A valid measurement with every field overridable."""
    return Measurement(
        id=rid, station=station,
        timestamp=when or dt.datetime(2015, 7, 1, 10, 0, 0, tzinfo=UTC),
        ecoli=ecoli, salinity=salinity, water_temp=water_temp, air_temp=air_temp,
        ghi=ghi, ghi_cum4h=ghi_cum4h, rain_4_7d=rain_4_7d, rain_7_14d=rain_7_14d,
        outlier=outlier)


def dataset_from_ecoli(values, station="ST", **overrides):
    """One record per E. coli value, ids r0..rN in input order."""
    recs = tuple(make_record(rid=f"r{i}", station=station, ecoli=v, **overrides)
                 for i, v in enumerate(values))
    return Dataset(records=recs, provenance="test")


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def ecoli_dataset_factory():
    return dataset_from_ecoli


@pytest.fixture(scope="session")
def synth_default():
    """The calibrated nine-station dataset, seed 0 (1133 records)."""
    return generate_dataset(default_config(seed=0))


@pytest.fixture(scope="session")
def synth_split(synth_default):
    """Default uniform 4-in-5 split of the calibrated dataset."""
    return uniform_split(synth_default)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Re-echo the acceptance checklist, which capture would otherwise hide."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance checklist")
        for line in lines:
            terminalreporter.write_line(line)
