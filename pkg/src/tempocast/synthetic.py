"""Seeded synthetic meteorological frames: a diurnal wind-speed cycle plus an
AR(1) disturbance and physically bounded companion channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .ingest import TimeSeriesFrame

START = np.datetime64("2015-01-01T00", "h")


@dataclass(frozen=True)
class SyntheticSpec:
    length: int = 4000
    base_speed: float = 5.0  # m/s
    diurnal_amplitude: float = 1.5  # m/s
    period: float = 24.0  # hours
    trend_slope: float = 0.0  # m/s per hour
    ar_coeff: float = 0.75
    noise_std: float = 0.4  # m/s
    channel_seed: int = 7  # sub-stream for the non-wind channels

    def __post_init__(self):
        if self.length < 200:
            raise ParameterError(f"synthetic length must be >= 200, got {self.length}")
        if not -1.0 < self.ar_coeff < 1.0:
            raise ParameterError("AR(1) coefficient must lie in (-1, 1)")
        if self.noise_std < 0 or self.diurnal_amplitude < 0 or self.period <= 0:
            raise ParameterError("amplitude and period must be positive, noise_std >= 0")


def _ar1(rng: np.random.Generator, n: int, phi: float, std: float) -> np.ndarray:
    if std == 0.0:
        return np.zeros(n)
    eps = rng.normal(0.0, std, size=n)
    out = np.empty(n)
    out[0] = 0.0
    for t in range(1, n):
        out[t] = phi * out[t - 1] + eps[t]
    return out


def gen_synthetic(spec: SyntheticSpec, seed: int) -> TimeSeriesFrame:
    """Deterministic per (spec, seed); channels respect the schema bounds."""
    n = spec.length
    t = np.arange(n, dtype=np.float64)
    rng = np.random.default_rng([seed, spec.channel_seed])

    diurnal = np.sin(2.0 * np.pi * t / spec.period)
    ws10 = (
        spec.base_speed
        + spec.diurnal_amplitude * diurnal
        + spec.trend_slope * t
        + _ar1(rng, n, spec.ar_coeff, spec.noise_std)
    )
    ws10 = np.maximum(0.0, ws10)
    ws2 = np.maximum(0.0, ws10 + rng.normal(0.0, 0.15, size=n))

    tem = 8.0 + 10.0 * np.sin(2.0 * np.pi * (t - 6.0) / 24.0) + _ar1(rng, n, 0.9, 0.5)
    rhu = np.clip(60.0 - 1.8 * (tem - 8.0) + rng.normal(0.0, 4.0, size=n), 0.0, 100.0)
    prs = np.clip(
        995.0 + 8.0 * np.sin(2.0 * np.pi * t / (24.0 * 30.0)) + _ar1(rng, n, 0.95, 0.3),
        850.0,
        1100.0,
    )
    rain = rng.random(n) < 0.03
    pre = np.where(rain, rng.exponential(0.8, size=n), 0.0)
    wd10 = np.mod(200.0 + np.cumsum(rng.normal(0.0, 6.0, size=n)), 360.0)
    wd2 = np.mod(wd10 + rng.normal(0.0, 5.0, size=n), 360.0)

    values = np.column_stack([prs, tem, rhu, pre, wd2, ws2, wd10, ws10])
    timestamps = START + np.arange(n)
    return TimeSeriesFrame(timestamps=timestamps, values=values)
