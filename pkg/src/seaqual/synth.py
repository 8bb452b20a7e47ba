"""Synthetic bathing-water monitoring data.

Generates datasets with the statistical fingerprint of a multi-season
coastal monitoring campaign: per-station log-normal E. coli with
station-specific levels, Gaussian salinity negatively rank-correlated
with E. coli through a Gaussian copula, a spring freshening dip in
salinity, a clear-sky diurnal irradiance shape, and mostly-zero
rainfall.  Everything is deterministic per seed; each station consumes
its own derived RNG stream, so adding or reordering stations does not
disturb the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .dataio import Dataset, Measurement
from .errors import ConfigError
from .rng import derive_seed


@dataclass(frozen=True)
class StationSpec:
    code: str
    n: int
    ecoli_log_mean: float   # mean of log E. coli (log-normal mu)
    ecoli_log_sd: float     # sd of log E. coli (log-normal sigma)
    salinity_mean: float    # summer baseline PSU
    salinity_sd: float

    def __post_init__(self):
        if not self.code:
            raise ConfigError("station code must be non-empty")
        if self.n < 1:
            raise ConfigError(f"station {self.code}: n must be >= 1, got {self.n}")
        if self.ecoli_log_sd < 0 or self.salinity_sd < 0:
            raise ConfigError(f"station {self.code}: spreads must be >= 0")


def station_from_moments(code: str, n: int, ecoli_mean: float, ecoli_median: float,
                         salinity_mean: float, salinity_sd: float = 1.2) -> StationSpec:
    """Fit the log-normal so the sample mean/median land on the targets.

    For a log-normal, median = exp(mu) and mean = median * exp(sigma^2/2),
    so sigma = sqrt(2 ln(mean/median)).
    """
    if ecoli_median <= 0 or ecoli_mean < ecoli_median:
        raise ConfigError(
            f"station {code}: need mean >= median > 0, got {ecoli_mean}/{ecoli_median}"
        )
    return StationSpec(code=code, n=n,
                       ecoli_log_mean=math.log(ecoli_median),
                       ecoli_log_sd=math.sqrt(2.0 * math.log(ecoli_mean / ecoli_median)),
                       salinity_mean=salinity_mean, salinity_sd=salinity_sd)


# Nine stations spanning clean/high-salinity to polluted/low-salinity,
# sized so the default dataset has 1133 records and roughly 4% of them
# above 250 CFU/100 mL.
DEFAULT_STATIONS = (
    station_from_moments("BRH", 122, 36.0, 5.0, 36.0),
    station_from_moments("KH", 123, 47.0, 7.0, 35.7),
    station_from_moments("KBW", 144, 36.0, 7.0, 35.9),
    station_from_moments("KBE", 149, 26.0, 5.0, 36.0),
    station_from_moments("KVN", 119, 35.8, 8.0, 35.5),
    station_from_moments("PNI", 20, 56.8, 26.0, 34.5),
    station_from_moments("KW", 151, 78.0, 35.0, 33.3),
    station_from_moments("KE", 155, 86.4, 60.0, 32.2),
    station_from_moments("3M", 150, 72.3, 25.0, 32.9),
)


@dataclass(frozen=True)
class SynthConfig:
    stations: tuple = DEFAULT_STATIONS
    salinity_ecoli_corr: float = -0.5   # target Spearman rank correlation
    spring_salinity_offset: float = 3.4  # PSU subtracted during the spring window
    season_start: tuple = (5, 1)
    season_end: tuple = (9, 30)
    spring_end: tuple = (6, 15)
    years: tuple = tuple(range(2009, 2021))
    rain_zero_prob: float = 0.85
    rain_scale_mm: float = 9.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "years", tuple(self.years))
        if not self.stations:
            raise ConfigError("need at least one station")
        codes = [s.code for s in self.stations]
        if len(set(codes)) != len(codes):
            raise ConfigError(f"duplicate station codes in {codes}")
        if not -1.0 < self.salinity_ecoli_corr <= 0.0:
            raise ConfigError(
                f"salinity_ecoli_corr must be in (-1, 0], got {self.salinity_ecoli_corr}"
            )
        if self.spring_salinity_offset < 0:
            raise ConfigError("spring_salinity_offset must be >= 0")
        if not 0.0 <= self.rain_zero_prob <= 1.0:
            raise ConfigError(f"rain_zero_prob must be in [0, 1], got {self.rain_zero_prob}")
        if self.rain_scale_mm <= 0:
            raise ConfigError("rain_scale_mm must be > 0")
        if not self.years:
            raise ConfigError("need at least one season year")
        for name in ("season_start", "season_end", "spring_end"):
            m, d = getattr(self, name)
            date(2000, m, d)  # validates the month/day pair


def default_config(seed: int = 0) -> SynthConfig:
    return SynthConfig(seed=seed)


def _clear_sky(hour_frac: float) -> float:
    """Normalized irradiance for daylight between 06:00 and 19:00."""
    s = math.sin(math.pi * (hour_frac - 6.0) / 13.0)
    return s if s > 0.0 else 0.0


def generate_dataset(cfg: SynthConfig) -> Dataset:
    # Spearman rho of a Gaussian copula with Pearson rho_p is
    # (6/pi) asin(rho_p/2); invert to hit the configured rank target.
    rho = 2.0 * math.sin(math.pi * cfg.salinity_ecoli_corr / 6.0)
    mix = math.sqrt(1.0 - rho * rho)

    records = []
    for s_idx, st in enumerate(cfg.stations):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, s_idx)))
        for i in range(st.n):
            year = cfg.years[i % len(cfg.years)]
            start = date(year, *cfg.season_start)
            n_days = (date(year, *cfg.season_end) - start).days + 1
            day = start + timedelta(days=int(rng.integers(0, n_days)))
            hour = int(rng.integers(8, 19))
            minute = int(rng.integers(0, 60))
            ts = datetime(day.year, day.month, day.day, hour, minute,
                          tzinfo=timezone.utc)
            in_spring = (day.month, day.day) <= cfg.spring_end

            z1 = rng.standard_normal()
            z2 = rho * z1 + mix * rng.standard_normal()
            ecoli = int(round(math.exp(st.ecoli_log_mean + st.ecoli_log_sd * z1)))
            salinity = st.salinity_mean + st.salinity_sd * z2
            if in_spring:
                salinity -= cfg.spring_salinity_offset
            salinity = min(45.0, max(0.0, salinity))

            season_frac = (day - start).days / max(1, n_days - 1)
            water_temp = 15.5 + 9.5 * math.sin(math.pi * (0.1 + 0.8 * season_frac))
            water_temp += rng.normal(0.0, 0.8)
            air_temp = water_temp + 1.5 + rng.normal(0.0, 2.5)

            cloud = 0.65 + 0.35 * rng.random()
            h = hour + minute / 60.0
            ghi = 950.0 * _clear_sky(h) * cloud
            ghi_cum = sum(950.0 * _clear_sky(h - j + 0.5) for j in range(1, 5)) * cloud

            rain = [0.0, 0.0]
            for j, scale in enumerate((cfg.rain_scale_mm, cfg.rain_scale_mm * 1.5)):
                if rng.random() >= cfg.rain_zero_prob:
                    rain[j] = round(float(rng.exponential(scale)), 1)

            records.append(Measurement(
                id=f"{st.code}-{i:04d}",
                station=st.code,
                timestamp=ts,
                salinity=round(salinity, 2),
                water_temp=round(water_temp, 2),
                air_temp=round(air_temp, 2),
                ghi=round(ghi, 1),
                ghi_cum4h=round(ghi_cum, 1),
                rain_4_7d=rain[0],
                rain_7_14d=rain[1],
                ecoli=ecoli,
                outlier=False,
            ))
    return Dataset(tuple(records), provenance=f"synth(seed={cfg.seed})")
