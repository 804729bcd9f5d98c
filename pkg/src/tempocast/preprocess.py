"""Normalization, sliding-window sample construction and chronological splitting."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyFrameError, ParameterError, ShapeError
from .ingest import CHANNELS, TimeSeriesFrame

log = logging.getLogger(__name__)

WS10_COL = CHANNELS.index("WS10mi")

DEFAULT_RETRO = 24
DEFAULT_HORIZONS = 6
LOOKBACKS = (4, 8, 12, 16)


@dataclass(frozen=True)
class Normalizer:
    """Per-column z-score or min-max transform.

    Degenerate (constant) columns are flagged: z-score maps them to 0,
    min-max to 0.5, and invert restores the constant.
    """

    kind: str  # "zscore" | "minmax"
    p0: np.ndarray  # mean (zscore) or min (minmax)
    p1: np.ndarray  # std (zscore) or max (minmax)
    flagged: np.ndarray  # bool per column, True where the column was constant

    @property
    def n_columns(self) -> int:
        return len(self.p0)

    def _check(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_columns:
            raise ShapeError(
                f"expected (n, {self.n_columns}) rows, got {rows.shape}"
            )
        return rows

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        if self.kind == "zscore":
            denom = np.where(self.flagged, 1.0, self.p1)
            out = (rows - self.p0) / denom
            out[:, self.flagged] = 0.0
        else:
            denom = np.where(self.flagged, 1.0, self.p1 - self.p0)
            out = (rows - self.p0) / denom
            out[:, self.flagged] = 0.5
        return out

    def invert(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        if self.kind == "zscore":
            out = rows * np.where(self.flagged, 0.0, self.p1) + self.p0
        else:
            scale = np.where(self.flagged, 0.0, self.p1 - self.p0)
            out = rows * scale + self.p0
        return out


def fit_normalizer(rows: np.ndarray, kind: str = "zscore") -> Normalizer:
    """Fit per-column parameters; z-score uses the population std (divide by N)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ShapeError(f"expected a 2-D row matrix, got shape {rows.shape}")
    if rows.shape[0] < 2:
        raise ParameterError("need at least 2 rows to fit a normalizer")
    if kind == "zscore":
        p0 = rows.mean(axis=0)
        p1 = rows.std(axis=0)
        flagged = p1 == 0.0
    elif kind == "minmax":
        p0 = rows.min(axis=0)
        p1 = rows.max(axis=0)
        flagged = p1 == p0
    else:
        raise ParameterError(f"unknown normalizer kind {kind!r}")
    if flagged.any():
        log.warning(
            "fit_normalizer(%s): constant column(s) at %s flagged",
            kind,
            np.flatnonzero(flagged).tolist(),
        )
    return Normalizer(kind=kind, p0=p0, p1=p1, flagged=flagged)


class Sample(NamedTuple):
    input_window: np.ndarray  # (L, 8) raw values
    retro_window: np.ndarray  # (R, 8) raw values ending at origin_time
    target: np.ndarray  # (H,) future WS10mi in m/s
    origin_time: np.datetime64


@dataclass(frozen=True)
class WindowedDataset:
    """Aligned (input window, retrospective window, multi-horizon target) samples.

    ``retro`` is (n, R, 8) raw channel values, the R rows ending at each
    origin; the input window is its last ``lookback`` rows. ``targets`` is
    (n, H) with targets[i, h-1] = WS10mi at origin_time[i] + h hours.
    """

    lookback: int
    horizons: int
    retro: np.ndarray
    targets: np.ndarray
    origin_times: np.ndarray

    @property
    def inputs(self) -> np.ndarray:
        return self.retro[:, self.retro.shape[1] - self.lookback :, :]

    @property
    def retro_len(self) -> int:
        return self.retro.shape[1]

    def __len__(self) -> int:
        return len(self.origin_times)

    def __getitem__(self, i: int) -> Sample:
        return Sample(
            input_window=self.inputs[i],
            retro_window=self.retro[i],
            target=self.targets[i],
            origin_time=self.origin_times[i],
        )

    def slice(self, start: int, stop: int) -> "WindowedDataset":
        return WindowedDataset(
            lookback=self.lookback,
            horizons=self.horizons,
            retro=self.retro[start:stop],
            targets=self.targets[start:stop],
            origin_times=self.origin_times[start:stop],
        )


def make_windows(
    frame: TimeSeriesFrame,
    lookback: int,
    horizons: int = DEFAULT_HORIZONS,
    retro: int = DEFAULT_RETRO,
) -> WindowedDataset:
    """Slide a width-``retro`` history plus ``horizons``-step target over the frame.

    Sample count is len(frame) - retro - horizons + 1; origins are the
    instants the forecast is issued from.
    """
    if lookback > retro:
        raise ParameterError(f"lookback {lookback} exceeds retrospective window {retro}")
    if lookback < 1 or horizons < 1:
        raise ParameterError("lookback and horizons must be positive")
    n = len(frame)
    count = n - retro - horizons + 1
    if count < 1:
        raise EmptyFrameError(
            f"frame of length {n} too short for retro={retro}, horizons={horizons}"
        )
    origins = np.arange(retro - 1, retro - 1 + count)
    retro_idx = origins[:, None] + np.arange(-(retro - 1), 1)[None, :]
    target_idx = origins[:, None] + np.arange(1, horizons + 1)[None, :]
    return WindowedDataset(
        lookback=lookback,
        horizons=horizons,
        retro=frame.values[retro_idx],
        targets=frame.values[target_idx, WS10_COL],
        origin_times=frame.timestamps[origins],
    )


def split_chronological(
    ds: WindowedDataset, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> tuple[WindowedDataset, WindowedDataset, WindowedDataset]:
    """Contiguous train/val/test blocks in time order.

    Samples whose target range reaches into the rows used by the next
    block's windows are dropped from the earlier block, so no target
    instant of one block appears inside another block's input windows.
    """
    if len(fractions) != 3:
        raise ParameterError("fractions must be (train, val, test)")
    names = ("train", "val", "test")
    for name, f in zip(names, fractions):
        if f <= 0:
            raise ParameterError(f"{name} fraction must be positive, got {f}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ParameterError(f"fractions must sum to 1, got {sum(fractions)}")

    n = len(ds)
    a = int(n * fractions[0])
    b = a + int(n * fractions[1])
    bounds = [(0, a), (a, b), (b, n)]

    # Targets cover origin+1 .. origin+H; the next block's windows start
    # retro-1 rows before its first origin. Keep sample i of the earlier
    # block only if origin_i + H < first_origin_next - (retro - 1).
    gap = ds.retro_len + ds.horizons - 1
    parts = []
    for k, (lo, hi) in enumerate(bounds):
        if k < 2:
            next_lo = bounds[k + 1][0]
            hi = min(hi, next_lo - gap)
        if hi <= lo:
            raise EmptyFrameError(
                f"{names[k]} split empty after boundary dropping "
                f"(fractions {fractions}, {n} samples)"
            )
        parts.append(ds.slice(lo, hi))
    return parts[0], parts[1], parts[2]
