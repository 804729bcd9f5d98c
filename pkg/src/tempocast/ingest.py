"""Hourly meteorological CSV ingestion: parsing, validation, gap filling, summary stats.

The on-disk format is a comma-separated UTF-8 file with a header row naming
the timestamp column plus the eight observed channels (any column order),
timestamps as ISO-8601 ``YYYY-MM-DDTHH:00``, ``.`` as the decimal point.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFrameError, GapError, ParameterError, ParseError, SchemaError, ValidationError

log = logging.getLogger(__name__)

CHANNELS = ("PRS", "TEM", "RHU", "PRE1h", "WD2mi", "WS2mi", "WD10mi", "WS10mi")
TIME_COLUMN = "timestamp"

#: inclusive (low, high) physical bounds per channel; None means unbounded
CHANNEL_BOUNDS = {
    "PRS": (850.0, 1100.0),
    "TEM": (None, None),
    "RHU": (0.0, 100.0),
    "PRE1h": (0.0, None),
    "WD2mi": (0.0, 360.0),
    "WS2mi": (0.0, None),
    "WD10mi": (0.0, 360.0),
    "WS10mi": (0.0, None),
}

HOUR = np.timedelta64(1, "h")

GAP_POLICIES = ("forward-fill", "reject")


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Hourly 8-channel series: ``timestamps`` (n,) datetime64[h] strictly
    increasing, ``values`` (n, 8) float64 with columns ordered as CHANNELS."""

    timestamps: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, CHANNELS.index(name)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeriesFrame):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and bool(np.array_equal(self.timestamps, other.timestamps))
            and bool(np.array_equal(self.values, other.values))
        )


@dataclass(frozen=True)
class StatsTable:
    """Per-channel count / mean / population std / min / quartiles / max."""

    count: int
    mean: np.ndarray
    std: np.ndarray
    minimum: np.ndarray
    q25: np.ndarray
    q50: np.ndarray
    q75: np.ndarray
    maximum: np.ndarray

    _ROWS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("stat",) + CHANNELS)
        rows = (
            [self.count] * len(CHANNELS),
            self.mean,
            self.std,
            self.minimum,
            self.q25,
            self.q50,
            self.q75,
            self.maximum,
        )
        for label, vals in zip(self._ROWS, rows):
            w.writerow([label] + [_fmt(v) for v in vals])
        return out.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse_timestamp(text: str, row: int) -> np.datetime64:
    try:
        ts = np.datetime64(text.strip())
    except ValueError:
        raise ParseError(f"row {row}: cannot parse timestamp {text!r}", row=row) from None
    hours = ts.astype("datetime64[h]")
    if hours.astype("datetime64[m]") != ts.astype("datetime64[m]"):
        raise ValidationError(
            f"row {row}: timestamp {text!r} is not on a whole hour", row=row
        )
    return hours


def parse_records(csv_text: str) -> TimeSeriesFrame:
    """Parse CSV text into a validated TimeSeriesFrame.

    Row order is preserved. Raises SchemaError for a bad header, ParseError
    for unparseable cells (with the 0-based data-row index), ValidationError
    for out-of-bound values or non-increasing timestamps, EmptyFrameError
    when there are no data rows.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("input is empty, expected a header row") from None

    expected = {TIME_COLUMN, *CHANNELS}
    missing = expected - set(header)
    if missing:
        raise SchemaError(f"missing column(s): {sorted(missing)}")
    unknown = set(header) - expected
    if unknown:
        raise SchemaError(f"unknown column(s): {sorted(unknown)}")
    if len(header) != len(expected):
        raise SchemaError("duplicate columns in header")

    time_idx = header.index(TIME_COLUMN)
    chan_idx = [header.index(c) for c in CHANNELS]

    timestamps: list[np.datetime64] = []
    rows: list[list[float]] = []
    for i, rec in enumerate(reader):
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != len(header):
            raise ParseError(f"row {i}: expected {len(header)} cells, got {len(rec)}", row=i)
        ts = _parse_timestamp(rec[time_idx], i)
        if timestamps and ts <= timestamps[-1]:
            raise ValidationError(
                f"row {i}: timestamp {ts} does not increase over previous row", row=i
            )
        vals = []
        for name, j in zip(CHANNELS, chan_idx):
            cell = rec[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"row {i}: non-numeric value {cell!r} in {name}", row=i) from None
            if not np.isfinite(v):
                raise ValidationError(
                    f"row {i}: non-finite value in {name}", column=name, row=i, value=v
                )
            lo, hi = CHANNEL_BOUNDS[name]
            if (lo is not None and v < lo) or (hi is not None and v > hi):
                raise ValidationError(
                    f"row {i}: {name}={v} outside [{lo}, {hi}]", column=name, row=i, value=v
                )
            vals.append(v)
        timestamps.append(ts)
        rows.append(vals)

    if not rows:
        raise EmptyFrameError("no data rows after header")
    return TimeSeriesFrame(
        timestamps=np.array(timestamps, dtype="datetime64[h]"),
        values=np.array(rows, dtype=np.float64),
    )


def serialize_records(frame: TimeSeriesFrame) -> str:
    """Inverse of parse_records; emits canonical column order and full float precision."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow((TIME_COLUMN,) + CHANNELS)
    for ts, row in zip(frame.timestamps, frame.values):
        w.writerow([f"{ts}:00"] + [repr(float(v)) for v in row])
    return out.getvalue()


def read_frame(path) -> TimeSeriesFrame:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh.read())


def write_frame(frame: TimeSeriesFrame, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_records(frame))


def impute_gaps(frame: TimeSeriesFrame, policy: str = "forward-fill") -> TimeSeriesFrame:
    """Return an hourly-regular frame.

    forward-fill copies the previous row into each missing hour (count is
    logged); reject raises GapError listing the missing instants.
    """
    if policy not in GAP_POLICIES:
        raise ParameterError(f"unknown gap policy {policy!r}, expected one of {GAP_POLICIES}")
    if len(frame) == 0:
        raise EmptyFrameError("cannot impute an empty frame, nothing to fill from")

    steps = np.diff(frame.timestamps) / HOUR
    if len(steps) == 0 or np.all(steps == 1):
        log.info("impute_gaps: 0 gaps")
        return frame

    if policy == "reject":
        missing = []
        for ts, gap in zip(frame.timestamps[:-1], steps):
            for k in range(1, int(gap)):
                missing.append(ts + k * HOUR)
        raise GapError(
            f"{len(missing)} missing hour(s), first at {missing[0]}", missing=missing
        )

    span = int((frame.timestamps[-1] - frame.timestamps[0]) / HOUR)
    full_ts = frame.timestamps[0] + np.arange(span + 1) * HOUR
    # index of the latest existing row at or before each hour
    src = np.searchsorted(frame.timestamps, full_ts, side="right") - 1
    filled = len(full_ts) - len(frame)
    log.info("impute_gaps: filled %d missing hour(s)", filled)
    return TimeSeriesFrame(timestamps=full_ts, values=frame.values[src].copy())


def summarize(frame: TimeSeriesFrame) -> StatsTable:
    """Column statistics; std is the population convention (divide by N),
    quartiles use linear interpolation."""
    if len(frame) == 0:
        raise EmptyFrameError("cannot summarize an empty frame")
    v = frame.values
    q25, q50, q75 = np.quantile(v, [0.25, 0.5, 0.75], axis=0)
    return StatsTable(
        count=len(frame),
        mean=v.mean(axis=0),
        std=v.std(axis=0),
        minimum=v.min(axis=0),
        q25=q25,
        q50=q50,
        q75=q75,
        maximum=v.max(axis=0),
    )
