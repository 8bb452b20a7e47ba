"""Dataset schema: validation, CSV round-trips, labeling."""

import datetime as dt
import io
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seaqual import dataio
from seaqual.dataio import (ABOVE, BELOW, CSV_HEADER, DEFAULT_FEATURES, Dataset,
                            Measurement, label, parse_dataset, remove_outliers,
                            serialize_dataset, station_stats)
from seaqual.errors import ConfigError, ParseError, ValidationError

from conftest import UTC, dataset_from_ecoli, make_record

# ------------------------------------------------------------ validation


def test_measurement_rejects_naive_timestamp():
    with pytest.raises(ValidationError):
        make_record(when=dt.datetime(2015, 7, 1, 10, 0, 0))


def test_measurement_rejects_bad_values():
    with pytest.raises(ValidationError):
        make_record(ecoli=-1)
    with pytest.raises(ValidationError):
        make_record(ecoli=True)  # bools are not counts
    with pytest.raises(ValidationError):
        make_record(salinity=45.1)
    with pytest.raises(ValidationError):
        make_record(salinity=-0.5)
    with pytest.raises(ValidationError):
        make_record(ghi=-1.0)
    with pytest.raises(ValidationError):
        make_record(rain_4_7d=-0.1)
    with pytest.raises(ValidationError):
        make_record(rid="")
    with pytest.raises(ValidationError):
        make_record(station="")


def test_dataset_rejects_duplicate_ids():
    recs = (make_record(rid="a"), make_record(rid="a"))
    with pytest.raises(ValidationError, match="duplicate"):
        Dataset(records=recs, provenance="test")


def test_dataset_accessors():
    d = Dataset(records=(
        make_record(rid="a", station="KW", when=dt.datetime(2014, 6, 1, tzinfo=UTC), ecoli=5),
        make_record(rid="b", station="BRH", when=dt.datetime(2012, 8, 2, tzinfo=UTC), ecoli=9),
    ), provenance="test")
    assert len(d) == 2
    assert d.stations() == ("BRH", "KW")
    assert d.years() == (2012, 2014)
    assert list(d.ecoli_values()) == [5, 9]


# ------------------------------------------------------------- CSV round trip


def test_serialize_parse_round_trip():
    d = dataset_from_ecoli([3, 250, 251], salinity=34.25)
    text = serialize_dataset(d)
    back = parse_dataset(io.StringIO(text), provenance="test")
    assert back.records == d.records
    assert serialize_dataset(back) == text  # stable bytes


def _set_cell(csv_text, row, column, value):
    """Overwrite one data cell; row is 1-based over data lines."""
    lines = csv_text.splitlines()
    parts = lines[row].split(",")
    parts[dataio.COLUMNS.index(column)] = value
    lines[row] = ",".join(parts)
    return "\n".join(lines) + "\n"


def test_csv_header_is_exact():
    d = dataset_from_ecoli([1])
    assert serialize_dataset(d).splitlines()[0] == CSV_HEADER
    assert CSV_HEADER == ("id,station,timestamp,salinity,water_temp,air_temp,"
                          "ghi,ghi_cum4h,rain_4_7d,rain_7_14d,ecoli,outlier")


def test_parse_rejects_wrong_header():
    with pytest.raises(ParseError, match="header"):
        parse_dataset(io.StringIO("id,station\nx,y\n"))


def test_parse_reports_line_numbers():
    text = serialize_dataset(dataset_from_ecoli([1, 2]))
    broken = _set_cell(text, 2, "ecoli", "banana")
    with pytest.raises(ParseError, match="line 3"):
        parse_dataset(io.StringIO(broken))


def test_parse_rejects_wrong_column_count():
    text = serialize_dataset(dataset_from_ecoli([1]))
    lines = text.splitlines()
    lines[1] += ",extra"
    with pytest.raises(ParseError, match="line 2"):
        parse_dataset(io.StringIO("\n".join(lines) + "\n"))


def test_parse_negative_ecoli_is_validation_error_with_line():
    text = serialize_dataset(dataset_from_ecoli([1]))
    broken = _set_cell(text, 1, "ecoli", "-4")
    with pytest.raises(ValidationError, match="line 2"):
        parse_dataset(io.StringIO(broken))


def test_parse_defaults_missing_rain_and_warns_once(caplog):
    d = dataset_from_ecoli([1, 2, 3], rain_4_7d=7.0)
    text = serialize_dataset(d)
    text = _set_cell(text, 1, "rain_4_7d", "")
    text = _set_cell(text, 3, "rain_4_7d", "")
    with caplog.at_level(logging.WARNING, logger="seaqual.dataio"):
        back = parse_dataset(io.StringIO(text))
    assert back.records[0].rain_4_7d == 0.0
    assert back.records[1].rain_4_7d == 7.0
    assert back.records[2].rain_4_7d == 0.0
    warnings = [r for r in caplog.records if "rain" in r.getMessage()]
    assert len(warnings) == 1
    assert "2" in warnings[0].getMessage()  # count of defaulted cells


@given(st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=10**6),                 # ecoli
        st.floats(min_value=0, max_value=45, allow_nan=False),     # salinity
        st.floats(min_value=-5, max_value=40, allow_nan=False),    # water temp
        st.floats(min_value=0, max_value=1500, allow_nan=False),   # ghi
        st.floats(min_value=0, max_value=200, allow_nan=False),    # rain
        st.booleans()),                                            # outlier
    min_size=1, max_size=20))
@settings(max_examples=50)
def test_round_trip_identity_property(rows):
    recs = tuple(
        make_record(rid=f"r{i}", ecoli=e, salinity=s, water_temp=w,
                    ghi=g, ghi_cum4h=4 * g, rain_4_7d=r, rain_7_14d=2 * r,
                    outlier=o)
        for i, (e, s, w, g, r, o) in enumerate(rows))
    d = Dataset(records=recs, provenance="prop")
    back = parse_dataset(io.StringIO(serialize_dataset(d)))
    assert back.records == d.records


def test_read_write_files(tmp_path):
    d = dataset_from_ecoli([10, 20])
    path = tmp_path / "data.csv"
    dataio.write_dataset(d, path)
    back = dataio.read_dataset(path)
    assert back.records == d.records
    assert back.provenance == str(path)


# ---------------------------------------------------------------- labeling


def test_label_boundary_is_below():
    d = dataset_from_ecoli([5, 150, 151])
    lab = label(d, 150)
    assert list(lab.labels) == [BELOW, BELOW, ABOVE]
    assert (lab.n_below, lab.n_above) == (2, 1)


def test_label_fractional_limit():
    d = dataset_from_ecoli([4, 5])
    lab = label(d, 4.5)
    assert list(lab.labels) == [BELOW, ABOVE]


def test_label_builds_feature_matrix_in_order():
    d = Dataset(records=(make_record(salinity=30.0, water_temp=18.0, air_temp=21.0,
                                     ghi=500.0, ghi_cum4h=1800.0),), provenance="t")
    lab = label(d, 250, features=("ghi", "salinity"))
    assert lab.feature_names == ("ghi", "salinity")
    assert lab.X.shape == (1, 2)
    assert list(lab.X[0]) == [500.0, 30.0]
    assert not lab.X.flags.writeable


def test_label_validates_inputs():
    d = dataset_from_ecoli([1])
    with pytest.raises(ValidationError):
        label(d, 0)
    with pytest.raises(ConfigError):
        label(d, 250, features=("nope",))
    with pytest.raises(ConfigError):
        label(d, 250, features=("salinity", "salinity"))


def test_default_features_exclude_rain():
    assert DEFAULT_FEATURES == ("salinity", "water_temp", "air_temp", "ghi",
                                "ghi_cum4h")


# ------------------------------------------------------------ derived stats


def test_remove_outliers():
    d = Dataset(records=(make_record(rid="a"), make_record(rid="b", outlier=True)),
                provenance="t")
    kept = remove_outliers(d)
    assert [r.id for r in kept.records] == ["a"]


def test_station_stats_sorted_and_type7():
    d = Dataset(records=(
        make_record(rid="a", station="KW", ecoli=10, salinity=30.0),
        make_record(rid="b", station="KW", ecoli=20, salinity=31.0),
        make_record(rid="c", station="BRH", ecoli=4, salinity=36.0),
    ), provenance="t")
    rows = station_stats(d)
    assert [s.station for s in rows] == ["BRH", "KW"]
    kw = rows[1]
    assert kw.n == 2
    assert kw.ecoli_mean == 15.0
    assert kw.ecoli_median == 15.0   # linear interpolation between 10 and 20
    assert kw.salinity_median == 30.5


def test_labels_are_uint8_below0_above1():
    assert BELOW == 0 and ABOVE == 1
    lab = label(dataset_from_ecoli([1, 999]), 250)
    assert lab.labels.dtype == np.uint8
