"""Deterministic synthetic flight logs with optional injected anomalies.

Normal profiles sit safely inside every documented rule limit (vibration
around 8 with a 30 ceiling, attitude deltas within 3 degrees against a 10
degree rule, HDop under 1.2 against 2.0), so injected anomalies are the
only thing the detectors can find.  Magnetometer noise is high-passed
(first difference of white noise), which keeps its rolling correlation
with the smooth throttle trace near zero; a rejection loop re-draws in
the rare case any 200-sample window correlates beyond 0.1.

All groups share one timestamp grid at the profile's sample period, which
keeps the default test path single-rate; multi-rate alignment is covered
by resample_hold unit tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import BadInterval
from .features import rolling_pearson
from .logdata import (
    AnnotationSpan,
    AnomalyType,
    ChannelId,
    FlightLog,
    TimeSeries,
    get_series,
    resample_hold,
)
from .logparser import serialize_annotations, serialize_log

_SCHEMAS = {
    "ATT": ["TimeUS", "DesRoll", "Roll", "DesPitch", "Pitch", "DesYaw", "Yaw"],
    "VIBE": ["TimeUS", "VibeX", "VibeY", "VibeZ", "Clip0", "Clip1", "Clip2"],
    "MAG": ["TimeUS", "MagX", "MagY", "MagZ"],
    "MAG2": ["TimeUS", "MagX", "MagY", "MagZ"],
    "CTUN": ["TimeUS", "ThO", "Alt"],
    "GPS": ["TimeUS", "HDop", "NSats", "Alt"],
    "BAT": ["TimeUS", "Volt"],
    "BARO": ["TimeUS", "Alt"],
}

_MAG_BASE = np.array([230.0, -180.0, 310.0])  # milligauss-ish field vector


@dataclass(frozen=True)
class SynthProfile:
    """Waveform parameters for one clean flight."""

    duration_samples: int = 1000
    sample_period_us: int = 10_000
    seed: int = 0
    att_amplitude_deg: float = 10.0
    att_noise_deg: float = 1.0
    vibe_mean: float = 8.0
    vibe_wobble: float = 1.2
    vibe_noise: float = 1.2
    mag_noise: float = 1.0
    tho_base: float = 0.45
    tho_amplitude: float = 0.17
    hdop_base: float = 0.9
    hdop_wobble: float = 0.12
    batt_start_volts: float = 12.6
    batt_droop_volts_per_s: float = 0.002
    batt_noise_volts: float = 0.02

    def __post_init__(self):
        if self.duration_samples < 1 or self.sample_period_us < 1:
            raise ValueError("duration and sample period must be >= 1")
        for sigma in (self.att_noise_deg, self.vibe_noise, self.mag_noise,
                      self.batt_noise_volts):
            if sigma < 0:
                raise ValueError("noise sigmas must be >= 0")


class InjectionShape(Enum):
    BURST = "Burst"
    RAMP = "Ramp"
    OSCILLATION = "Oscillation"


@dataclass(frozen=True)
class InjectionSpec:
    anomaly_type: AnomalyType
    start_frac: float
    end_frac: float
    magnitude: float
    shape: InjectionShape = InjectionShape.BURST

    def __post_init__(self):
        if not (0 <= self.start_frac < self.end_frac < 1):
            raise ValueError("need 0 <= start_frac < end_frac < 1")
        if self.magnitude <= 0:
            raise ValueError("magnitude must be > 0")


def _ar1(rng: np.random.Generator, n: int, sigma: float, phi: float = 0.9) -> np.ndarray:
    white = rng.normal(0.0, 1.0, n)
    out = np.empty(n)
    scale = sigma * np.sqrt(1.0 - phi * phi)
    prev = white[0] * sigma
    for i in range(n):
        prev = phi * prev + scale * white[i]
        out[i] = prev
    return out


def _highpass_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    # first difference of white noise: almost no power at the low
    # frequencies where the throttle trace lives
    return np.diff(rng.normal(0.0, 1.0, n + 1)) * (sigma / np.sqrt(2.0))


def generate_normal(profile: SynthProfile, log_id: str = "synth") -> FlightLog:
    """One clean flight log; identical for identical profiles."""
    n = profile.duration_samples
    ts = np.arange(n, dtype=np.int64) * profile.sample_period_us
    seconds = ts / 1e6
    rng = np.random.default_rng(profile.seed)

    # attitude: smooth desired maneuvers, actual = desired - small delta
    att_cols = []
    for axis_amp in (profile.att_amplitude_deg, 0.8 * profile.att_amplitude_deg,
                     4.0 * profile.att_amplitude_deg):
        phase = rng.uniform(0, 2 * np.pi, 2)
        desired = axis_amp * np.sin(2 * np.pi * 0.05 * seconds + phase[0]) \
            + 0.4 * axis_amp * np.sin(2 * np.pi * 0.013 * seconds + phase[1])
        delta = np.clip(_ar1(rng, n, profile.att_noise_deg), -2.5, 2.5)
        att_cols += [desired, desired - delta]

    vibe_cols = []
    for _axis in range(3):
        phase = rng.uniform(0, 2 * np.pi)
        vibe = profile.vibe_mean \
            + profile.vibe_wobble * np.sin(2 * np.pi * 0.4 * seconds + phase) \
            + rng.normal(0.0, profile.vibe_noise, n)
        vibe_cols.append(np.clip(vibe, 0.5, 20.0))
    clips = np.zeros(n)

    tho = profile.tho_base + profile.tho_amplitude * np.sin(
        2 * np.pi * 0.06 * seconds + rng.uniform(0, 2 * np.pi)
    )

    def draw_mag():
        return np.stack(
            [_MAG_BASE[i] + _highpass_noise(rng, n, profile.mag_noise) for i in range(3)],
            axis=1,
        )

    def decorrelated(make, series_of, margin):
        for _attempt in range(100):
            cand = make()
            if n < 200:
                return cand
            r = rolling_pearson(tho, series_of(cand), 200)
            if np.abs(r).max() < margin:
                return cand
        raise RuntimeError("could not decorrelate synthetic channel from throttle")

    mag = decorrelated(draw_mag, lambda m: np.sqrt((m * m).sum(axis=1)), 0.1)
    mag2 = decorrelated(draw_mag, lambda m: np.sqrt((m * m).sum(axis=1)), 0.1)

    hdop = np.clip(
        profile.hdop_base
        + profile.hdop_wobble * np.sin(2 * np.pi * 0.05 * seconds + rng.uniform(0, 2 * np.pi))
        + rng.normal(0.0, 0.03, n),
        0.6,
        1.2,
    )
    nsats = np.full(n, 14.0)

    alt = 25.0 + 12.0 * np.sin(2 * np.pi * 0.01 * seconds + rng.uniform(0, 2 * np.pi))
    baro_alt = alt + rng.normal(0.0, 0.05, n)
    gps_alt = alt + rng.normal(0.0, 0.3, n)

    volt_base = profile.batt_start_volts - profile.batt_droop_volts_per_s * seconds
    volt = decorrelated(
        lambda: volt_base + rng.normal(0.0, profile.batt_noise_volts, n),
        lambda v: -v,
        0.2,
    )

    values = {
        "ATT": np.column_stack(att_cols),
        "VIBE": np.column_stack(vibe_cols + [clips, clips, clips]),
        "MAG": mag,
        "MAG2": mag2,
        "CTUN": np.column_stack([tho, alt]),
        "GPS": np.column_stack([hdop, nsats, gps_alt]),
        "BAT": volt.reshape(-1, 1),
        "BARO": baro_alt.reshape(-1, 1),
    }
    times = {name: ts.copy() for name in _SCHEMAS}
    return FlightLog(log_id, {k: list(v) for k, v in _SCHEMAS.items()}, times, values)


def _shape_profile(shape: InjectionShape, length: int) -> np.ndarray:
    u = np.linspace(0.0, 1.0, length)
    if shape is InjectionShape.BURST:
        return np.ones(length)
    if shape is InjectionShape.RAMP:
        return u
    cycles = max(2, length // 40)
    return np.sin(np.pi * cycles * u) ** 2


def _interval_indices(n: int, spec: InjectionSpec) -> tuple[int, int]:
    i0 = int(round(spec.start_frac * n))
    i1 = int(round(spec.end_frac * n))
    if not (0 <= i0 < i1 <= n) or i1 - i0 < 2:
        raise BadInterval(
            f"injection [{spec.start_frac}, {spec.end_frac}) maps to "
            f"[{i0}, {i1}) in a {n}-sample log"
        )
    return i0, i1


def inject(
    log: FlightLog, spec: InjectionSpec, seed: int = 0
) -> tuple[FlightLog, AnnotationSpan]:
    """Overlay one anomaly; samples outside the interval stay bit-identical.

    Magnitude semantics per type: Vibration and GpsGlitch blend toward an
    absolute target level; Attitude is the peak divergence in degrees;
    CompassInterference is the throttle-to-field coupling gain; Power is
    the voltage sag per unit of throttle surge.
    """
    rng = np.random.default_rng(seed)
    values = {name: arr.copy() for name, arr in log.values.items()}
    times = dict(log.times)
    group = {
        AnomalyType.VIBRATION: "VIBE",
        AnomalyType.ATTITUDE: "ATT",
        AnomalyType.COMPASS_INTERFERENCE: "MAG",
        AnomalyType.GPS_GLITCH: "GPS",
        AnomalyType.POWER: "CTUN",
    }[spec.anomaly_type]
    ts = times[group]
    n = len(ts)
    i0, i1 = _interval_indices(n, spec)
    length = i1 - i0
    s = _shape_profile(spec.shape, length)
    u = np.linspace(0.0, 1.0, length)

    if spec.anomaly_type is AnomalyType.VIBRATION:
        for col in range(3):  # VibeX, VibeY, VibeZ
            seg = values["VIBE"][i0:i1, col]
            values["VIBE"][i0:i1, col] = seg * (1.0 - s) + spec.magnitude * s

    elif spec.anomaly_type is AnomalyType.ATTITUDE:
        # actual attitude walks away from desired; per-axis sign/scale mix
        for col, gain in ((1, -1.0), (3, 0.8), (5, -0.6)):  # Roll, Pitch, Yaw
            values["ATT"][i0:i1, col] += gain * spec.magnitude * s

    elif spec.anomaly_type is AnomalyType.COMPASS_INTERFERENCE:
        tho = get_series(log, ChannelId("CTUN", "ThO"))
        tho_on_grid = resample_hold(tho, ts).values[i0:i1]
        coupling = spec.magnitude * tho_on_grid * s
        if spec.shape is InjectionShape.OSCILLATION:
            # alternating-polarity interference: large field swings whose
            # rolling correlation with the smooth throttle stays near zero
            carrier_period = 16
            coupling = spec.magnitude * tho_on_grid * np.sin(
                2 * np.pi * np.arange(length) / carrier_period
            )
        direction = _MAG_BASE / np.linalg.norm(_MAG_BASE)
        for inst in ("MAG", "MAG2"):
            values[inst][i0:i1, :] += coupling[:, None] * direction[None, :]

    elif spec.anomaly_type is AnomalyType.GPS_GLITCH:
        wobble = 1.0 + 0.15 * np.sin(2 * np.pi * 4.0 * u + rng.uniform(0, 2 * np.pi))
        seg = values["GPS"][i0:i1, 0]
        values["GPS"][i0:i1, 0] = seg * (1.0 - s) + (spec.magnitude * wobble) * s

    else:  # Power: throttle surges with a coupled voltage sag
        surge = 0.25 * s * np.sin(np.pi * max(2, length // 100) * u) ** 2
        values["CTUN"][i0:i1, 0] += surge
        full_surge = np.zeros(n)
        full_surge[i0:i1] = surge
        volt_ts = times["BAT"]
        keep = np.flatnonzero(volt_ts >= ts[0])
        surge_on_volt = resample_hold(
            TimeSeries(ts, full_surge, ChannelId("CTUN", "ThO")), volt_ts[keep]
        ).values
        touched = keep[surge_on_volt != 0.0]
        values["BAT"][touched, 0] -= spec.magnitude * surge_on_volt[surge_on_volt != 0.0]

    span = AnnotationSpan(
        log_id=log.log_id,
        anomaly_type=spec.anomaly_type,
        start_us=int(ts[i0]),
        end_us=int(ts[i1]) if i1 < n else int(ts[-1]) + int(ts[-1] - ts[-2] if n > 1 else 1),
    )
    return (
        FlightLog(log.log_id, log.schemas, times, values, log.source_path),
        span,
    )


@dataclass(frozen=True)
class Corpus:
    logs: list[FlightLog]
    annotations: list[AnnotationSpan]
    manifest: dict


def benchmark_suite(
    n_normal: int,
    n_anomalous: int,
    anomaly_type: AnomalyType,
    seed: int,
    duration_samples: int = 1000,
    sample_period_us: int = 10_000,
) -> Corpus:
    """Labeled corpus: clean logs plus logs with one injection each.

    Anomalous magnitudes alternate between cases the documented-threshold
    rules catch and cases only a calibrated model can (sub-threshold
    vibration/attitude levels; alternating-polarity compass coupling).
    """
    if n_normal < 1 or n_anomalous < 1:
        raise ValueError("corpus needs at least one normal and one anomalous log")
    master = np.random.default_rng(seed)
    prefix = anomaly_type.value.lower()
    logs: list[FlightLog] = []
    annotations: list[AnnotationSpan] = []

    def new_profile():
        return SynthProfile(
            duration_samples=duration_samples,
            sample_period_us=sample_period_us,
            seed=int(master.integers(2**62)),
        )

    for i in range(n_normal):
        logs.append(generate_normal(new_profile(), f"{prefix}_norm_{i:03d}"))

    for j in range(n_anomalous):
        base = generate_normal(new_profile(), f"{prefix}_anom_{j:03d}")
        length = master.uniform(0.25, 0.45)
        start = master.uniform(0.05, 0.92 - length)
        supra = j % 2 == 0
        if anomaly_type is AnomalyType.VIBRATION:
            magnitude = master.uniform(33, 48) if supra else master.uniform(22, 28)
            shape = InjectionShape.BURST if master.random() < 0.5 else InjectionShape.OSCILLATION
        elif anomaly_type is AnomalyType.ATTITUDE:
            magnitude = master.uniform(12, 20) if supra else master.uniform(5.5, 8.5)
            shape = InjectionShape.RAMP
        elif anomaly_type is AnomalyType.COMPASS_INTERFERENCE:
            magnitude = master.uniform(40, 90)
            shape = InjectionShape.BURST if supra else InjectionShape.OSCILLATION
        elif anomaly_type is AnomalyType.GPS_GLITCH:
            magnitude = master.uniform(2.6, 4.5)
            shape = InjectionShape.BURST
        else:
            magnitude = master.uniform(1.5, 3.0)
            shape = InjectionShape.BURST
        spec = InjectionSpec(anomaly_type, start, start + length, magnitude, shape)
        injected, span = inject(base, spec, seed=int(master.integers(2**62)))
        logs.append(injected)
        annotations.append(span)

    manifest = {
        "anomaly_type": anomaly_type.value,
        "seed": seed,
        "n_normal": n_normal,
        "n_anomalous": n_anomalous,
        "duration_samples": duration_samples,
        "sample_period_us": sample_period_us,
    }
    return Corpus(logs, annotations, manifest)


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    """Write logs/<id>.log, annotations.json, and manifest.json."""
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    for log in corpus.logs:
        (out / "logs" / f"{log.log_id}.log").write_text(serialize_log(log))
    (out / "annotations.json").write_text(serialize_annotations(corpus.annotations))
    (out / "manifest.json").write_text(
        json.dumps(corpus.manifest, indent=2, sort_keys=True) + "\n"
    )
