"""Autoencoder and rule-based anomaly detectors over flight logs.

Detection spans are half-open [start_us, end_us): end_us is the timestamp
of the first sample after the anomalous run (last timestamp + 1 at the end
of a log).  Every threshold comparison is strict >, which makes calibration
soundness exact: re-scoring the calibration windows can never flag one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    EmptyDataset,
    MissingChannel,
    ThresholdUnset,
    TooFewPoints,
    TooShort,
    UnknownField,
    UnknownGroup,
)
from .features import (
    FeatureKind,
    FeatureSpec,
    WindowedDataset,
    attitude_deltas,
    extract_features,
    mag_l2norm,
    minmax_apply,
    rolling_pearson,
    sliding_windows,
)
from .logdata import AnomalyType, ChannelId, FlightLog, get_series, resample_hold
from .neural import TrainedModel, reconstruction_errors


class DetectionSource(Enum):
    AUTOENCODER = "Autoencoder"
    RULE = "Rule"


@dataclass(frozen=True)
class DetectionSpan:
    """One detected anomaly interval; n_points counts the merged windows
    or samples behind it (used for log-level verdicts)."""

    anomaly_type: AnomalyType
    start_us: int
    end_us: int
    score: float
    source: DetectionSource
    n_points: int = 1

    def __post_init__(self):
        if self.start_us >= self.end_us:
            raise ValueError("span must satisfy start_us < end_us")
        if self.score < 0:
            raise ValueError("span score must be >= 0")


class RuleKind(Enum):
    VIBRATION_THRESHOLD = "VibrationThreshold"
    ATTITUDE_THRESHOLD = "AttitudeThreshold"
    COMPASS_CORRELATION = "CompassCorrelation"
    CLIP_COUNT = "ClipCount"
    GPS_HDOP = "GpsHdop"
    POWER_CORRELATION = "PowerCorrelation"


_RULE_DEFAULTS = {
    RuleKind.VIBRATION_THRESHOLD: 30.0,  # ms^-2 documented ceiling
    RuleKind.ATTITUDE_THRESHOLD: 10.0,  # degrees
    RuleKind.COMPASS_CORRELATION: 0.30,
    RuleKind.CLIP_COUNT: 100.0,
    RuleKind.GPS_HDOP: 2.0,
    RuleKind.POWER_CORRELATION: 0.30,
}

_RULE_ANOMALY = {
    RuleKind.VIBRATION_THRESHOLD: AnomalyType.VIBRATION,
    RuleKind.ATTITUDE_THRESHOLD: AnomalyType.ATTITUDE,
    RuleKind.COMPASS_CORRELATION: AnomalyType.COMPASS_INTERFERENCE,
    RuleKind.CLIP_COUNT: AnomalyType.VIBRATION,
    RuleKind.GPS_HDOP: AnomalyType.GPS_GLITCH,
    RuleKind.POWER_CORRELATION: AnomalyType.POWER,
}


@dataclass(frozen=True)
class RuleSpec:
    kind: RuleKind
    limit: float
    window: int = 200  # correlation rules only

    def __post_init__(self):
        if self.limit <= 0:
            raise ValueError("rule limit must be > 0")
        if self.window < 2:
            raise ValueError("correlation window must be >= 2")


def default_rule(kind: RuleKind, limit: float | None = None, window: int = 200) -> RuleSpec:
    return RuleSpec(kind, _RULE_DEFAULTS[kind] if limit is None else limit, window)


def model_anomaly_type(model: TrainedModel) -> AnomalyType:
    return {
        "Vibration": AnomalyType.VIBRATION,
        "Attitude": AnomalyType.ATTITUDE,
        "Compass": AnomalyType.COMPASS_INTERFERENCE,
    }[model.spec.kind.value]


def feature_kind_for_model(model: TrainedModel) -> FeatureKind:
    return {
        "Vibration": FeatureKind.VIBRATION_XYZ,
        "Attitude": FeatureKind.ATTITUDE_DELTAS,
        "Compass": FeatureKind.COMPASS_THROTTLE_MAG,
    }[model.spec.kind.value]


def score_windows(model: TrainedModel, windows: np.ndarray) -> np.ndarray:
    """Errors for raw feature windows; normalizes per the model's flags."""
    windows = np.asarray(windows, dtype=np.float64)
    if model.spec.normalize:
        if model.norm is None:
            raise ValueError("model requires normalization parameters but has none")
        windows = minmax_apply(windows, model.norm)
    return reconstruction_errors(model.spec, model.weights, windows)


def window_error(model: TrainedModel, window: np.ndarray) -> float:
    """Reconstruction error of one raw feature window (T x F)."""
    window = np.asarray(window, dtype=np.float64)
    return float(score_windows(model, window[None, :, :])[0])


def calibrate_threshold(model: TrainedModel, train: WindowedDataset) -> float:
    """Set the threshold to the maximum training-window error.

    The dataset windows are network-ready (already normalized when the
    feature spec said so), so they are scored without re-normalization.
    """
    if train.samples == 0:
        raise EmptyDataset("cannot calibrate on an empty dataset")
    errors = reconstruction_errors(model.spec, model.weights, train.data)
    model.threshold = float(errors.max())
    return model.threshold


def _next_sample_end(ts: np.ndarray, last_idx: int) -> int:
    return int(ts[last_idx + 1]) if last_idx + 1 < len(ts) else int(ts[last_idx]) + 1


def _runs(mask: np.ndarray):
    """Yield (first, last) index pairs of consecutive True runs."""
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    ends = np.r_[idx[breaks], idx[-1]]
    yield from zip(starts, ends)


def detect_autoencoder(
    model: TrainedModel,
    log: FlightLog,
    spec: FeatureSpec,
    stride: int = 1,
) -> tuple[list[DetectionSpan], bool, float]:
    """Window the log, score every window, and merge flagged windows.

    Consecutive anomalous windows (adjacent window indices) merge into one
    span scored by the max window error; max_score over all windows is
    always returned for ROC sweeps.
    """
    if model.threshold is None:
        raise ThresholdUnset("calibrate_threshold must run before detection")
    ts, feats = extract_features(log, spec)
    timesteps = model.spec.timesteps
    if len(ts) < timesteps:
        raise TooShort(
            f"log {log.log_id!r} has {len(ts)} samples, needs {timesteps}"
        )
    windows = sliding_windows(feats, timesteps, stride)
    errors = score_windows(model, windows)
    flagged = errors > model.threshold
    anomaly = model_anomaly_type(model)

    spans = []
    for first, last in _runs(flagged):
        lo_row = int(first) * stride
        hi_row = int(last) * stride + timesteps - 1
        spans.append(
            DetectionSpan(
                anomaly_type=anomaly,
                start_us=int(ts[lo_row]),
                end_us=_next_sample_end(ts, hi_row),
                score=float(errors[first : last + 1].max()),
                source=DetectionSource.AUTOENCODER,
                n_points=int(last - first + 1),
            )
        )
    return spans, bool(flagged.any()), float(errors.max())


def _sample_rule_spans(
    ts: np.ndarray,
    exceedance: np.ndarray,
    anomaly: AnomalyType,
) -> list[DetectionSpan]:
    """Merge consecutive samples with exceedance > 0 into spans."""
    spans = []
    for first, last in _runs(exceedance > 0):
        spans.append(
            DetectionSpan(
                anomaly_type=anomaly,
                start_us=int(ts[first]),
                end_us=_next_sample_end(ts, int(last)),
                score=float(exceedance[first : last + 1].max()),
                source=DetectionSource.RULE,
                n_points=int(last - first + 1),
            )
        )
    return spans


def _series(log: FlightLog, group: str, field: str):
    try:
        return get_series(log, ChannelId(group, field))
    except (UnknownGroup, UnknownField) as exc:
        raise MissingChannel(f"log {log.log_id!r}: {group}.{field} ({exc})") from exc


def rule_detect(log: FlightLog, rule: RuleSpec) -> tuple[list[DetectionSpan], bool]:
    """Apply one documented-threshold rule; spans score the max exceedance
    (value - limit) or, for correlation rules, the correlation itself."""
    kind = rule.kind
    anomaly = _RULE_ANOMALY[kind]

    if kind is RuleKind.VIBRATION_THRESHOLD:
        axes = [_series(log, "VIBE", f) for f in ("VibeX", "VibeY", "VibeZ")]
        ts = axes[0].timestamps
        exceed = np.max([a.values for a in axes], axis=0) - rule.limit
        spans = _sample_rule_spans(ts, exceed, anomaly)

    elif kind is RuleKind.ATTITUDE_THRESHOLD:
        deltas = attitude_deltas(log)
        ts = deltas[0].timestamps
        exceed = np.max([np.abs(d.values) for d in deltas], axis=0) - rule.limit
        spans = _sample_rule_spans(ts, exceed, anomaly)

    elif kind is RuleKind.GPS_HDOP:
        hdop = _series(log, "GPS", "HDop")
        spans = _sample_rule_spans(hdop.timestamps, hdop.values - rule.limit, anomaly)

    elif kind is RuleKind.CLIP_COUNT:
        spans = _clip_count_spans(log, rule)

    else:  # correlation rules
        spans = _correlation_spans(log, rule, anomaly)

    return spans, bool(spans)


def _clip_count_spans(log: FlightLog, rule: RuleSpec) -> list[DetectionSpan]:
    """Cumulative clip counters: trigger when any grows by more than the
    limit in flight; the span covers first through last increment."""
    intervals = []
    for field in ("Clip0", "Clip1", "Clip2"):
        clip = _series(log, "VIBE", field)
        if len(clip) < 2:
            continue
        total = clip.values[-1] - clip.values[0]
        if total <= rule.limit:
            continue
        increases = np.flatnonzero(np.diff(clip.values) > 0) + 1
        first, last = int(increases[0]), int(increases[-1])
        intervals.append(
            (
                int(clip.timestamps[first]),
                _next_sample_end(clip.timestamps, last),
                float(total - rule.limit),
                len(increases),
            )
        )
    if not intervals:
        return []
    # merge overlapping per-counter intervals so spans stay disjoint
    intervals.sort()
    merged = [intervals[0]]
    for start, end, score, count in intervals[1:]:
        last_start, last_end, last_score, last_count = merged[-1]
        if start < last_end:
            merged[-1] = (
                last_start,
                max(last_end, end),
                max(last_score, score),
                max(last_count, count),
            )
        else:
            merged.append((start, end, score, count))
    return [
        DetectionSpan(AnomalyType.VIBRATION, start, end, score,
                      DetectionSource.RULE, count)
        for start, end, score, count in merged
    ]


def _correlation_spans(log: FlightLog, rule: RuleSpec, anomaly) -> list[DetectionSpan]:
    """Rolling trailing-window Pearson rules.

    Compass: throttle zero-order-held onto the MAG grid vs the MAG l2-norm.
    Power: negated battery voltage held onto the throttle grid vs throttle.
    A position is anomalous when its trailing-window correlation exceeds
    the limit; defined from index window-1 on.
    """
    if rule.kind is RuleKind.COMPASS_CORRELATION:
        tho = _series(log, "CTUN", "ThO")
        mag = mag_l2norm(log, "MAG")
        if len(tho) == 0 or len(mag) == 0:
            raise TooFewPoints("correlation rule needs non-empty channels")
        keep = mag.timestamps >= tho.timestamps[0]
        grid = mag.timestamps[keep]
        if len(grid) < rule.window:
            raise TooFewPoints(
                f"{len(grid)} aligned samples < correlation window {rule.window}"
            )
        x = resample_hold(tho, grid).values
        y = mag.values[keep]
    else:
        tho = _series(log, "CTUN", "ThO")
        volt = _series(log, "BAT", "Volt")
        if len(tho) == 0 or len(volt) == 0:
            raise TooFewPoints("correlation rule needs non-empty channels")
        keep = tho.timestamps >= volt.timestamps[0]
        grid = tho.timestamps[keep]
        if len(grid) < rule.window:
            raise TooFewPoints(
                f"{len(grid)} aligned samples < correlation window {rule.window}"
            )
        x = tho.values[keep]
        y = -resample_hold(volt, grid).values

    r = rolling_pearson(x, y, rule.window)
    ts_tail = grid[rule.window - 1 :]
    spans = []
    for first, last in _runs(r > rule.limit):
        spans.append(
            DetectionSpan(
                anomaly_type=anomaly,
                start_us=int(ts_tail[first]),
                end_us=_next_sample_end(ts_tail, int(last)),
                score=float(r[first : last + 1].max()),
                source=DetectionSource.RULE,
                n_points=int(last - first + 1),
            )
        )
    return spans


def classify_log(spans: list[DetectionSpan], min_windows: int = 1) -> bool:
    """Log-level verdict: anomalous windows/samples across spans >= min_windows."""
    if min_windows < 1:
        raise ValueError("min_windows must be >= 1")
    return sum(span.n_points for span in spans) >= min_windows


def detection_to_json(
    spans: list[DetectionSpan], verdict: bool, max_score: float | None = None
) -> str:
    doc = {
        "spans": [
            {
                "type": s.anomaly_type.value,
                "start_us": s.start_us,
                "end_us": s.end_us,
                "score": s.score,
                "source": s.source.value,
            }
            for s in spans
        ],
        "verdict": verdict,
    }
    if max_score is not None and math.isfinite(max_score):
        doc["max_score"] = max_score
    return json.dumps(doc, indent=2, sort_keys=True)
