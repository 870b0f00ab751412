"""Requirement templates per anomaly type and report rendering.

Each template records the event-driven placeholder requirements for one
anomaly family, the symptom channels a detector watches, and alternate
causes a reviewer should rule out.  Requirement texts are stored exactly
as sourced (including spelling slips such as "anomally"); rendering
applies the spelling fixes in ``_SPELLING_FIXES``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .detect import DetectionSource, DetectionSpan
from .errors import UnknownAnomalyType
from .logdata import AnomalyType, ChannelId, FlightLog, get_series

_SPELLING_FIXES = {
    "anomally": "anomaly",
    "more then": "more than",
    "magenetometers": "magnetometers",
    "the a correlation": "a correlation",
    "Acceleratometer": "Accelerometer",
}


@dataclass(frozen=True)
class Requirement:
    req_id: str
    text: str  # verbatim source text; display copies are normalized


@dataclass(frozen=True)
class ResamTemplate:
    anomaly_type: AnomalyType
    requirements: tuple[Requirement, ...]
    symptoms: tuple[tuple[str, tuple[ChannelId, ...]], ...]
    alternate_causes: tuple[str, ...]

    def __post_init__(self):
        if not self.requirements:
            raise ValueError("a template needs at least one requirement")
        for _desc, channels in self.symptoms:
            if not channels:
                raise ValueError("every symptom must reference a channel")


def normalize_spelling(text: str) -> str:
    for wrong, right in _SPELLING_FIXES.items():
        text = text.replace(wrong, right)
    return text


def _ch(group: str, field: str) -> ChannelId:
    return ChannelId(group, field)


def builtin_templates() -> dict[AnomalyType, ResamTemplate]:
    """The five built-in anomaly templates."""
    return {
        AnomalyType.ATTITUDE: ResamTemplate(
            anomaly_type=AnomalyType.ATTITUDE,
            requirements=(
                Requirement(
                    "R1",
                    "When the actual roll, pitch, or yaw deviates suddenly and "
                    "sufficiently from desired roll, pitch, or yaw, then an "
                    "attitude divergence anomally shall be detected.",
                ),
            ),
            symptoms=(
                (
                    "Sudden divergence of actual attitude (roll, pitch, yaw) "
                    "from desired attitude.",
                    (
                        _ch("ATT", "Roll"), _ch("ATT", "Pitch"), _ch("ATT", "Yaw"),
                        _ch("ATT", "DesRoll"), _ch("ATT", "DesPitch"), _ch("ATT", "DesYaw"),
                    ),
                ),
            ),
            alternate_causes=(
                "Severe wind",
                "Twitch maneuvers of the UAV (e.g., for collision avoidance).",
            ),
        ),
        AnomalyType.VIBRATION: ResamTemplate(
            anomaly_type=AnomalyType.VIBRATION,
            requirements=(
                Requirement(
                    "R1",
                    "When the deviation between GPS readings and estimated "
                    "position exceeds 30 ms^-2 on any axis (X,Y,Z), then a "
                    "geolocation anomaly shall be detected.",
                ),
                Requirement(
                    "R2",
                    "When the accelerometer reaches its maximum limit more then "
                    "100 times during a mission with increasing frequency, then "
                    "an 'overworked accelerometer' error shall be detected.",
                ),
            ),
            symptoms=(
                (
                    "Standard deviation of accelerometer measurements across three axes.",
                    (_ch("VIBE", "VibeX"), _ch("VIBE", "VibeY"), _ch("VIBE", "VibeZ")),
                ),
                (
                    "Acceleratometer frequently reaching maximum limit",
                    (_ch("VIBE", "Clip0"), _ch("VIBE", "Clip1"), _ch("VIBE", "Clip2")),
                ),
            ),
            alternate_causes=(
                "Aging and/or underpowered battery",
                "Excessive wind.",
                "Tuning error (e.g., MOT_THST_HOVER not set correctly)",
            ),
        ),
        AnomalyType.GPS_GLITCH: ResamTemplate(
            anomaly_type=AnomalyType.GPS_GLITCH,
            requirements=(
                Requirement(
                    "R1",
                    "When GPS.HDop values exceed 2 a 'GPS Glitch with Loss of "
                    "horizontal precision' error shall be raised.",
                ),
                Requirement(
                    "R2",
                    "When GPS.HDop values exceed 2 and sudden and sharp course "
                    "corrections are detected, then a 'GPS Geolocation Failure' "
                    "shall be raised.",
                ),
            ),
            symptoms=(
                ("Number of satellites", (_ch("GPS", "NSats"),)),
                ("Loss of GPS precision.", (_ch("GPS", "HDop"),)),
                ("Sharp flight route divergence", (_ch("GPS", "Lat"), _ch("GPS", "Lng"))),
            ),
            alternate_causes=(
                "Loss of satellite lock",
                "Incorrect positioning of components on UAV causing interference",
            ),
        ),
        AnomalyType.COMPASS_INTERFERENCE: ResamTemplate(
            anomaly_type=AnomalyType.COMPASS_INTERFERENCE,
            requirements=(
                Requirement(
                    "R1",
                    "When the a correlation above 30% between the throttle and "
                    "magenetometers occurs, a compass interference anomaly shall "
                    "be detected.",
                ),
            ),
            symptoms=(
                (
                    "Increased throttle interferes with compass (detected by "
                    "correlation between magnetometer readings and throttle)",
                    (
                        _ch("MAG", "MagX"), _ch("MAG", "MagY"), _ch("MAG", "MagZ"),
                        _ch("CTUN", "ThO"),
                    ),
                ),
            ),
            alternate_causes=(),
        ),
        AnomalyType.POWER: ResamTemplate(
            anomaly_type=AnomalyType.POWER,
            requirements=(
                Requirement(
                    "R1",
                    "When increases in throttle are correlated with battery "
                    "drain then a 'throttle causing excessive battery drain' "
                    "error is detected.",
                ),
                Requirement(
                    "R2",
                    "When erratic swings in altitude are detected then an "
                    "'altitude fluctuation' error is detected.",
                ),
            ),
            symptoms=(
                (
                    "Increases in throttle correlated with battery drain",
                    (_ch("CTUN", "ThO"), _ch("BAT", "Volt")),
                ),
                (
                    "Erratic swings in altitude",
                    (_ch("BARO", "Alt"), _ch("CTUN", "Alt"), _ch("GPS", "Alt")),
                ),
            ),
            alternate_causes=(
                "Excessive wind.",
                "Onboard software or sensor drain",
            ),
        ),
    }


def explain_span(
    span: DetectionSpan,
    templates: dict[AnomalyType, ResamTemplate],
    threshold: float | None = None,
    threshold_units: str = "",
) -> str:
    """Human-readable explanation of one detection from its template.

    When a learned threshold is supplied it replaces the qualitative
    wording of the requirement with the concrete calibrated value.
    """
    template = templates.get(span.anomaly_type)
    if template is None:
        raise UnknownAnomalyType(f"no template for {span.anomaly_type!r}")
    lines = [
        f"Anomaly: {span.anomaly_type.value} (source: {span.source.value})",
        f"Interval: {span.start_us} us to {span.end_us} us "
        f"({(span.end_us - span.start_us) / 1e6:.2f} s)",
        f"Score: {span.score:.6g}",
    ]
    for req in template.requirements:
        line = f"Requirement {req.req_id}: {normalize_spelling(req.text)}"
        if threshold is not None and span.source is DetectionSource.AUTOENCODER:
            units = f" {threshold_units}" if threshold_units else ""
            line += f" [learned threshold: {threshold:.6g}{units}]"
        lines.append(line)
    for desc, channels in template.symptoms:
        names = ", ".join(str(c) for c in channels)
        lines.append(f"Symptom: {normalize_spelling(desc)} [{names}]")
    if template.alternate_causes:
        lines.append("Alternate causes to consider:")
        lines.extend(f"  - {cause}" for cause in template.alternate_causes)
    else:
        lines.append("No known alternate causes of symptoms")
    return "\n".join(lines)


def _in_any_span(ts: int, spans: list[DetectionSpan]) -> bool:
    return any(s.start_us <= ts < s.end_us for s in spans)


def render_report(
    log: FlightLog,
    spans: list[DetectionSpan],
    templates: dict[AnomalyType, ResamTemplate],
    out_dir: str | Path,
    threshold: float | None = None,
    threshold_units: str = "",
) -> dict[str, Path]:
    """Write a Markdown report, per-channel CSVs, and a summary JSON.

    CSV rows are ``timestamp_us,value,in_anomaly`` where in_anomaly marks
    samples covered by any detection span, so the span set can be
    reconstructed from the flags.  Content is deterministic.
    """
    out = Path(out_dir)
    channel_dir = out / "channels"
    channel_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(spans, key=lambda s: (s.start_us, s.end_us))

    md = [f"# Anomaly report for log `{log.log_id}`", ""]
    if not ordered:
        md += ["## No anomalies detected", ""]
    for i, span in enumerate(ordered, start=1):
        md += [
            f"## Anomaly {i}: {span.anomaly_type.value}",
            "",
            "```",
            explain_span(span, templates, threshold, threshold_units),
            "```",
            "",
        ]
    report_path = out / "report.md"
    report_path.write_text("\n".join(md))

    csv_paths = []
    for group in sorted(log.schemas):
        for field in log.schemas[group][1:]:
            series = get_series(log, ChannelId(group, field))
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["timestamp_us", "value", "in_anomaly"])
            for ts, value in zip(series.timestamps, series.values):
                writer.writerow([int(ts), repr(float(value)), int(_in_any_span(int(ts), ordered))])
            path = channel_dir / f"{group}_{field}.csv"
            path.write_text(buf.getvalue())
            csv_paths.append(path)

    summary = {
        "log_id": log.log_id,
        "n_spans": len(ordered),
        "spans": [
            {
                "type": s.anomaly_type.value,
                "start_us": s.start_us,
                "end_us": s.end_us,
                "score": s.score,
                "source": s.source.value,
            }
            for s in ordered
        ],
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return {"report": report_path, "summary": summary_path, "channels": csv_paths}
