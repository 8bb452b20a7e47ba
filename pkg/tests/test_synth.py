"""Calibration and invariants of the synthetic-data generator."""

import numpy as np
import pytest
from scipy.stats import spearmanr

from seaqual.errors import ConfigError
from seaqual.synth import (DEFAULT_STATIONS, StationSpec, SynthConfig,
                           default_config, generate_dataset, station_from_moments)

BIG = 10_000


def _one_station_config(n=BIG, mean=86.4, median=60.0, corr=-0.5, seed=0, **kw):
    spec = station_from_moments("TS", n, mean, median, salinity_mean=33.0)
    return SynthConfig(stations=(spec,), salinity_ecoli_corr=corr, seed=seed, **kw)


# ----------------------------------------------------------- configuration


def test_station_from_moments_log_normal_parameters():
    s = station_from_moments("KE", 155, ecoli_mean=86.4, ecoli_median=60.0,
                             salinity_mean=30.0)
    assert s.ecoli_log_mean == pytest.approx(np.log(60.0))
    # mean/median = exp(sigma^2/2)
    assert s.ecoli_log_sd == pytest.approx(np.sqrt(2 * np.log(86.4 / 60.0)))


def test_station_from_moments_rejects_mean_below_median():
    with pytest.raises(ConfigError):
        station_from_moments("X", 10, ecoli_mean=5.0, ecoli_median=9.0,
                             salinity_mean=30.0)
    with pytest.raises(ConfigError):
        station_from_moments("X", 10, ecoli_mean=5.0, ecoli_median=0.0,
                             salinity_mean=30.0)


def test_config_rejects_duplicate_station_codes():
    s = station_from_moments("A", 10, 20.0, 10.0, 33.0)
    with pytest.raises(ConfigError):
        SynthConfig(stations=(s, s))


def test_config_rejects_positive_correlation():
    with pytest.raises(ConfigError):
        _one_station_config(corr=0.2)


def test_default_calibration_shape():
    assert len(DEFAULT_STATIONS) == 9
    assert sum(s.n for s in DEFAULT_STATIONS) == 1133
    codes = {s.code for s in DEFAULT_STATIONS}
    assert codes == {"BRH", "KH", "KBW", "KBE", "KVN", "PNI", "KW", "KE", "3M"}


# ------------------------------------------------------------- determinism


def test_generation_is_deterministic():
    a = generate_dataset(default_config(seed=3))
    b = generate_dataset(default_config(seed=3))
    assert a.records == b.records
    c = generate_dataset(default_config(seed=4))
    assert a.records != c.records


def test_provenance_names_the_seed():
    d = generate_dataset(_one_station_config(n=20, seed=9))
    assert d.provenance == "synth(seed=9)"


# ---------------------------------------------------------------- validity


def test_generated_records_respect_the_schema(synth_default):
    d = synth_default
    assert len(d) == 1133
    for r in d.records:
        assert r.ecoli >= 0
        assert 0.0 <= r.salinity <= 45.0
        assert 0.0 <= r.ghi <= 951.0
        assert 0.0 <= r.ghi_cum4h <= 4 * 951.0
        assert r.rain_4_7d >= 0.0 and r.rain_7_14d >= 0.0
        assert r.timestamp.month in (5, 6, 7, 8, 9)
        assert 2009 <= r.timestamp.year <= 2020
        assert 8 <= r.timestamp.hour <= 18
    # ids are "{code}-{counter}" and unique by Dataset construction
    assert d.records[0].id.split("-")[0] in {s.code for s in DEFAULT_STATIONS}


def test_per_station_counts_match_config(synth_default):
    counts = {}
    for r in synth_default.records:
        counts[r.station] = counts.get(r.station, 0) + 1
    assert counts == {s.code: s.n for s in DEFAULT_STATIONS}


# -------------------------------------------------------------- calibration


def test_log_normal_moments_are_recovered():
    d = generate_dataset(_one_station_config())
    ec = d.ecoli_values().astype(float)
    assert np.mean(ec) == pytest.approx(86.4, rel=0.10)
    assert np.median(ec) == pytest.approx(60.0, rel=0.15)


def test_salinity_ecoli_rank_correlation_hits_target():
    # spring desalination adds salinity variance uncorrelated with ecoli,
    # so the copula target is checked with the offset silenced
    d = generate_dataset(_one_station_config(spring_salinity_offset=0.0))
    sal = np.array([r.salinity for r in d.records])
    rho = spearmanr(sal, d.ecoli_values()).statistic
    assert -0.60 <= rho <= -0.40


def test_pooled_default_correlation_is_clearly_negative(synth_default):
    sal = np.array([r.salinity for r in synth_default.records])
    rho = spearmanr(sal, synth_default.ecoli_values()).statistic
    assert rho <= -0.35  # station gradient + copula both push the same way


def test_zero_correlation_config_decouples():
    d = generate_dataset(_one_station_config(corr=0.0))
    sal = np.array([r.salinity for r in d.records])
    rho = spearmanr(sal, d.ecoli_values()).statistic
    assert abs(rho) <= 0.05


def test_spring_salinity_runs_fresher():
    cfg = _one_station_config(spring_salinity_offset=3.4)
    d = generate_dataset(cfg)
    spring = [r.salinity for r in d.records
              if (r.timestamp.month, r.timestamp.day) <= (6, 15)]
    summer = [r.salinity for r in d.records if r.timestamp.month >= 7]
    assert len(spring) > 50 and len(summer) > 50
    assert np.mean(summer) - np.mean(spring) == pytest.approx(3.4, abs=0.5)


def test_rain_sparsity_matches_zero_probability():
    d = generate_dataset(_one_station_config(rain_zero_prob=0.85))
    zeros = sum(1 for r in d.records if r.rain_4_7d == 0.0)
    assert 0.82 <= zeros / len(d) <= 0.88


def test_default_imbalance_band(synth_default):
    above = sum(1 for r in synth_default.records if r.ecoli > 250)
    frac = above / len(synth_default)
    assert 0.02 <= frac <= 0.10  # rare-class regime at the 250 limit


def test_ghi_is_diurnal():
    d = generate_dataset(_one_station_config(n=2000))
    noon = [r.ghi for r in d.records if 11 <= r.timestamp.hour <= 13]
    edge = [r.ghi for r in d.records if r.timestamp.hour in (8, 18)]
    assert np.mean(noon) > np.mean(edge) * 1.5
