"""In-memory model of dataflash flight logs, channels, and annotations.

Timestamps are integer microseconds since boot (the TimeUS convention).
All interval arithmetic in this package is half-open [start_us, end_us).
Every type here is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    EmptySeries,
    GridBeforeData,
    InvertedSpan,
    UnknownField,
    UnknownGroup,
)


class AnomalyType(Enum):
    VIBRATION = "Vibration"
    ATTITUDE = "Attitude"
    COMPASS_INTERFERENCE = "CompassInterference"
    GPS_GLITCH = "GpsGlitch"
    POWER = "Power"

    @classmethod
    def from_name(cls, name: str) -> "AnomalyType":
        for member in cls:
            if member.value == name:
                return member
        raise KeyError(name)


@dataclass(frozen=True)
class ChannelId:
    """A (message group, column) pair, e.g. ("VIBE", "VibeZ")."""

    group: str
    field: str

    def __post_init__(self):
        if not self.group or not self.field:
            raise ValueError("channel group and field must be non-empty")

    def __str__(self) -> str:
        return f"{self.group}.{self.field}"


@dataclass(frozen=True)
class TimeSeries:
    """One channel's samples; timestamps strictly increasing int64 µs."""

    timestamps: np.ndarray
    values: np.ndarray
    channel: ChannelId

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vs = np.asarray(self.values, dtype=np.float64)
        if ts.shape != vs.shape or ts.ndim != 1:
            raise ValueError("timestamps and values must be 1-D and equally long")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class FlightLog:
    """Parsed dataflash log: per-message schemas and numeric records.

    ``schemas`` maps message name to its ordered column names (first column
    is always TimeUS).  ``times`` holds the TimeUS column per message
    (int64, non-decreasing) and ``values`` the remaining columns as a
    float64 array of shape (n_records, n_columns - 1).
    """

    log_id: str
    schemas: dict[str, list[str]]
    times: dict[str, np.ndarray]
    values: dict[str, np.ndarray]
    source_path: str | None = None

    def __post_init__(self):
        for name, cols in self.schemas.items():
            if not cols or cols[0] != "TimeUS":
                raise ValueError(f"{name}: first schema column must be TimeUS")
            ts = np.asarray(self.times[name], dtype=np.int64)
            vs = np.asarray(self.values[name], dtype=np.float64)
            if vs.ndim != 2 or vs.shape != (len(ts), len(cols) - 1):
                raise ValueError(f"{name}: record shape does not match schema")
            if len(ts) > 1 and np.any(np.diff(ts) < 0):
                raise ValueError(f"{name}: timestamps must be non-decreasing")
            self.times[name] = ts
            self.values[name] = vs

    @classmethod
    def from_rows(
        cls,
        log_id: str,
        schemas: dict[str, list[str]],
        rows: dict[str, list[tuple[int, tuple[float, ...]]]],
        source_path: str | None = None,
    ) -> "FlightLog":
        """Build a log from per-message (timestamp, values) rows."""
        times = {}
        values = {}
        for name, cols in schemas.items():
            recs = rows.get(name, [])
            times[name] = np.array([r[0] for r in recs], dtype=np.int64)
            vals = np.array([r[1] for r in recs], dtype=np.float64)
            values[name] = vals.reshape(len(recs), len(cols) - 1)
        return cls(log_id, dict(schemas), times, values, source_path)

    def record_count(self, name: str) -> int:
        return len(self.times[name])

    def iter_rows(self, name: str):
        """Yield (timestamp_us, value tuple) for one message in record order."""
        ts = self.times[name]
        vs = self.values[name]
        for k in range(len(ts)):
            yield int(ts[k]), tuple(vs[k])


@dataclass(frozen=True)
class AnnotationSpan:
    """A labeled anomaly interval [start_us, end_us) in one log."""

    log_id: str
    anomaly_type: AnomalyType
    start_us: int
    end_us: int

    def __post_init__(self):
        if not isinstance(self.anomaly_type, AnomalyType):
            raise TypeError("anomaly_type must be an AnomalyType member")
        if self.start_us >= self.end_us:
            raise InvertedSpan(f"span [{self.start_us}, {self.end_us}) is empty")


def get_series(log: FlightLog, channel: ChannelId) -> TimeSeries:
    """Extract one column as a TimeSeries.

    Duplicate timestamps within the message stream keep the last record
    (log-replay semantics), so the result is strictly increasing.
    """
    if channel.group not in log.schemas:
        raise UnknownGroup(f"no message group {channel.group!r} in log {log.log_id!r}")
    cols = log.schemas[channel.group]
    if channel.field not in cols:
        raise UnknownField(f"no field {channel.field!r} in group {channel.group!r}")
    ts = log.times[channel.group]
    j = cols.index(channel.field)
    vals = ts.astype(np.float64) if j == 0 else log.values[channel.group][:, j - 1]
    if len(ts) > 1:
        keep = np.r_[ts[1:] != ts[:-1], True]
        ts, vals = ts[keep], vals[keep]
    return TimeSeries(ts.copy(), np.asarray(vals, dtype=np.float64).copy(), channel)


def resample_hold(series: TimeSeries, grid) -> TimeSeries:
    """Zero-order hold of ``series`` onto ``grid`` (strictly increasing µs).

    Each grid point takes the value of the latest sample at or before it;
    causal, so no future leakage.
    """
    grid = np.asarray(grid, dtype=np.int64)
    if len(series) == 0:
        raise EmptySeries(f"cannot resample empty series {series.channel}")
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if len(grid) > 0 and grid[0] < series.timestamps[0]:
        raise GridBeforeData(
            f"grid starts at {grid[0]} before first sample {series.timestamps[0]}"
        )
    idx = np.searchsorted(series.timestamps, grid, side="right") - 1
    return TimeSeries(grid, series.values[idx], series.channel)


def span_overlaps(span: AnnotationSpan, start_us: int, end_us: int) -> bool:
    """True iff [span.start_us, span.end_us) and [start_us, end_us) intersect."""
    if start_us >= end_us:
        raise ValueError("query interval must satisfy start_us < end_us")
    return span.start_us < end_us and start_us < span.end_us
