"""Feature channels, normalization, and windowed dataset construction.

Each feature kind yields exactly three channels, matching the three-feature
datasets the detectors consume:

* VibrationXYZ      — VIBE.VibeX/Y/Z as logged.
* AttitudeDeltas    — desired minus actual roll/pitch/yaw, yaw wrapped.
* CompassThrottleMag — CTUN.ThO plus the l2-norms of MAG and MAG2, aligned
  by zero-order hold onto the MAG timestamp grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    EmptyDataset,
    EmptyInput,
    LengthMismatch,
    MissingChannel,
    ShapeMismatch,
    TooFewPoints,
    TooShort,
    UnknownField,
    UnknownGroup,
)
from .logdata import ChannelId, FlightLog, TimeSeries, get_series, resample_hold

logger = logging.getLogger(__name__)


class FeatureKind(Enum):
    VIBRATION_XYZ = "VibrationXYZ"
    ATTITUDE_DELTAS = "AttitudeDeltas"
    COMPASS_THROTTLE_MAG = "CompassThrottleMag"


_CHANNEL_NAMES = {
    FeatureKind.VIBRATION_XYZ: ["VIBE.VibeX", "VIBE.VibeY", "VIBE.VibeZ"],
    FeatureKind.ATTITUDE_DELTAS: [
        "ATT.DesRoll-Roll",
        "ATT.DesPitch-Pitch",
        "ATT.DesYaw-Yaw",
    ],
    FeatureKind.COMPASS_THROTTLE_MAG: ["CTUN.ThO", "MAG.l2norm", "MAG2.l2norm"],
}

# Attitude deltas stay in physical degrees (normalization is only documented
# for the vibration pipeline); compass mixes units so it must normalize.
_DEFAULT_NORMALIZE = {
    FeatureKind.VIBRATION_XYZ: True,
    FeatureKind.ATTITUDE_DELTAS: False,
    FeatureKind.COMPASS_THROTTLE_MAG: True,
}


@dataclass(frozen=True)
class FeatureSpec:
    kind: FeatureKind
    normalize: bool

    @property
    def channels(self) -> list[str]:
        return list(_CHANNEL_NAMES[self.kind])


def feature_spec(kind: FeatureKind, normalize: bool | None = None) -> FeatureSpec:
    """FeatureSpec with the documented default normalization flag."""
    if normalize is None:
        normalize = _DEFAULT_NORMALIZE[kind]
    return FeatureSpec(kind, normalize)


@dataclass(frozen=True)
class NormParams:
    """Per-feature min/max for min-max normalization."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        mn = np.asarray(self.minimum, dtype=np.float64)
        mx = np.asarray(self.maximum, dtype=np.float64)
        if mn.shape != mx.shape or mn.ndim != 1:
            raise ValueError("min and max must be 1-D and equally long")
        if np.any(mx < mn):
            raise ValueError("max must be >= min for every feature")
        object.__setattr__(self, "minimum", mn)
        object.__setattr__(self, "maximum", mx)


@dataclass(frozen=True)
class WindowedDataset:
    """3-D window array (samples x timesteps x features) with provenance.

    ``provenance[i]`` is (log_id, start_us, end_us) where end_us is the
    timestamp of the window's last covered sample.
    """

    data: np.ndarray
    norm: NormParams
    provenance: list[tuple[str, int, int]]
    timesteps: int
    stride: int

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("dataset array must be samples x timesteps x features")
        if len(self.provenance) != self.data.shape[0]:
            raise ValueError("provenance length must equal sample count")
        if self.data.shape[1] != self.timesteps:
            raise ValueError("window length must equal timesteps")

    @property
    def samples(self) -> int:
        return self.data.shape[0]


def _series_or_missing(log: FlightLog, group: str, field: str) -> TimeSeries:
    try:
        return get_series(log, ChannelId(group, field))
    except (UnknownGroup, UnknownField) as exc:
        raise MissingChannel(f"log {log.log_id!r}: {group}.{field} ({exc})") from exc


def wrap_degrees(delta: np.ndarray) -> np.ndarray:
    """Wrap angle differences into (-180, 180]."""
    wrapped = delta - 360.0 * np.floor((delta + 180.0) / 360.0)
    return np.where(wrapped == -180.0, 180.0, wrapped)


def attitude_deltas(log: FlightLog) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Desired-minus-actual roll, pitch, and wrapped yaw, on the ATT grid."""
    out = []
    for axis in ("Roll", "Pitch", "Yaw"):
        desired = _series_or_missing(log, "ATT", "Des" + axis)
        actual = _series_or_missing(log, "ATT", axis)
        delta = desired.values - actual.values
        if axis == "Yaw":
            delta = wrap_degrees(delta)
        out.append(
            TimeSeries(desired.timestamps, delta, ChannelId("ATT", f"Des{axis}-{axis}"))
        )
    return tuple(out)


def mag_l2norm(log: FlightLog, instance: str = "MAG") -> TimeSeries:
    """Magnetic field magnitude sqrt(MagX^2 + MagY^2 + MagZ^2)."""
    if instance not in ("MAG", "MAG2"):
        raise ValueError("instance must be 'MAG' or 'MAG2'")
    x = _series_or_missing(log, instance, "MagX")
    y = _series_or_missing(log, instance, "MagY")
    z = _series_or_missing(log, instance, "MagZ")
    norm = np.sqrt(x.values**2 + y.values**2 + z.values**2)
    return TimeSeries(x.timestamps, norm, ChannelId(instance, "l2norm"))


def minmax_fit(data: np.ndarray) -> NormParams:
    """Per-feature min and max over a (samples x features) array."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeMismatch("minmax_fit expects a 2-D samples x features array")
    if data.shape[0] < 1:
        raise EmptyInput("cannot fit normalization on zero samples")
    return NormParams(data.min(axis=0), data.max(axis=0))


def _check_feature_dim(data: np.ndarray, params: NormParams):
    if data.shape[-1] != len(params.minimum):
        raise ShapeMismatch(
            f"data has {data.shape[-1]} features, params have {len(params.minimum)}"
        )


def minmax_apply(data: np.ndarray, params: NormParams) -> np.ndarray:
    """x' = (x - min) / (max - min); degenerate features map to 0."""
    data = np.asarray(data, dtype=np.float64)
    _check_feature_dim(data, params)
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    out = (data - params.minimum) / safe
    if np.any(span == 0):
        out[..., span == 0] = 0.0
    return out


def minmax_invert(data: np.ndarray, params: NormParams) -> np.ndarray:
    """Exact inverse of minmax_apply wherever max > min."""
    data = np.asarray(data, dtype=np.float64)
    _check_feature_dim(data, params)
    return data * (params.maximum - params.minimum) + params.minimum


def sliding_windows(data: np.ndarray, timesteps: int, stride: int = 1) -> np.ndarray:
    """All windows of ``timesteps`` rows taken every ``stride`` rows.

    Window i covers rows [i*stride, i*stride + timesteps); the count is
    floor((L - timesteps) / stride) + 1.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeMismatch("sliding_windows expects a 2-D rows x features array")
    if timesteps < 1 or stride < 1:
        raise ValueError("timesteps and stride must be >= 1")
    length = data.shape[0]
    if length < timesteps:
        raise TooShort(f"{length} rows < window of {timesteps}")
    view = sliding_window_view(data, (timesteps, data.shape[1]))[::stride, 0]
    return np.ascontiguousarray(view)


def extract_features(log: FlightLog, spec: FeatureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-log feature extraction -> (timestamps, L x 3 array).

    CompassThrottleMag aligns ThO and the MAG2 norm onto the MAG grid by
    zero-order hold, trimming grid points that precede either source.
    """
    if spec.kind is FeatureKind.VIBRATION_XYZ:
        series = [_series_or_missing(log, "VIBE", f) for f in ("VibeX", "VibeY", "VibeZ")]
        ts = series[0].timestamps
    elif spec.kind is FeatureKind.ATTITUDE_DELTAS:
        series = list(attitude_deltas(log))
        ts = series[0].timestamps
    else:
        tho = _series_or_missing(log, "CTUN", "ThO")
        mag = mag_l2norm(log, "MAG")
        mag2 = mag_l2norm(log, "MAG2")
        for s in (tho, mag, mag2):
            if len(s) == 0:
                raise TooShort(f"log {log.log_id!r}: empty {s.channel}")
        first = max(tho.timestamps[0], mag.timestamps[0], mag2.timestamps[0])
        grid = mag.timestamps[mag.timestamps >= first]
        if len(grid) == 0:
            raise TooShort(f"log {log.log_id!r}: channels do not overlap in time")
        mag_on_grid = mag.values[mag.timestamps >= first]
        tho_on_grid = resample_hold(tho, grid).values
        mag2_on_grid = resample_hold(mag2, grid).values
        return grid, np.column_stack([tho_on_grid, mag_on_grid, mag2_on_grid])
    return ts, np.column_stack([s.values for s in series])


def build_dataset(
    logs: list[FlightLog],
    spec: FeatureSpec,
    timesteps: int,
    stride: int = 1,
    val_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[WindowedDataset, WindowedDataset]:
    """Windowed train/validation datasets from a set of (normal) logs.

    Windows are built per log, concatenated in input order, normalization
    is fitted on the full concatenated set (and applied when the spec says
    so), then a seeded uniform shuffle splits off round(total*val_fraction)
    validation windows.  Both outputs carry the same NormParams.
    """
    if not 0 <= val_fraction < 1:
        raise ValueError("val_fraction must be in [0, 1)")
    all_windows = []
    provenance: list[tuple[str, int, int]] = []
    for log in logs:
        ts, feats = extract_features(log, spec)
        if len(ts) < timesteps:
            logger.warning(
                "skipping log %r: %d samples < window of %d", log.log_id, len(ts), timesteps
            )
            continue
        windows = sliding_windows(feats, timesteps, stride)
        all_windows.append(windows)
        for i in range(windows.shape[0]):
            lo = i * stride
            provenance.append((log.log_id, int(ts[lo]), int(ts[lo + timesteps - 1])))
    if not all_windows:
        raise EmptyDataset("no log long enough to window")
    data = np.concatenate(all_windows, axis=0)
    norm = minmax_fit(data.reshape(-1, data.shape[2]))
    if spec.normalize:
        data = minmax_apply(data, norm)

    rng = np.random.default_rng(seed)
    order = rng.permutation(data.shape[0])
    n_val = int(data.shape[0] * val_fraction + 0.5)
    train_idx, val_idx = order[: len(order) - n_val], order[len(order) - n_val :]

    def subset(idx):
        return WindowedDataset(
            np.ascontiguousarray(data[idx]),
            norm,
            [provenance[i] for i in idx],
            timesteps,
            stride,
        )

    return subset(train_idx), subset(val_idx)


def concat_datasets(a: WindowedDataset, b: WindowedDataset) -> WindowedDataset:
    """Concatenate two datasets that share norm, timesteps, and stride."""
    if a.timesteps != b.timesteps or a.stride != b.stride:
        raise ShapeMismatch("datasets disagree on timesteps or stride")
    return WindowedDataset(
        np.concatenate([a.data, b.data], axis=0),
        a.norm,
        list(a.provenance) + list(b.provenance),
        a.timesteps,
        a.stride,
    )


def pearson(x, y) -> float:
    """Sample Pearson correlation; 0.0 if either vector is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("pearson needs two equally long vectors")
    if len(x) < 2:
        raise TooFewPoints("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = np.dot(dx, dx)
    vy = np.dot(dy, dy)
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return float(np.dot(dx, dy) / np.sqrt(vx * vy))


def rolling_pearson(x: np.ndarray, y: np.ndarray, window: int) -> np.ndarray:
    """Pearson correlation over every trailing window of the given length.

    Returns one value per position i >= window - 1 (length n - window + 1);
    constant windows yield 0.0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("rolling_pearson needs two equally long vectors")
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(x) < window:
        raise TooFewPoints(f"{len(x)} samples < correlation window of {window}")
    xw = sliding_window_view(x, window)
    yw = sliding_window_view(y, window)
    dx = xw - xw.mean(axis=1, keepdims=True)
    dy = yw - yw.mean(axis=1, keepdims=True)
    vx = np.einsum("ij,ij->i", dx, dx)
    vy = np.einsum("ij,ij->i", dy, dy)
    cov = np.einsum("ij,ij->i", dx, dy)
    denom = np.sqrt(vx * vy)
    out = np.zeros(len(xw))
    ok = denom > 0
    out[ok] = cov[ok] / denom[ok]
    return out
