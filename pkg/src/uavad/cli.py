"""Command-line surface: parse, synth, train, detect, rules, eval.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
The RESAM_LOG_LEVEL environment variable (error/warn/info/debug) controls
logging verbosity.  Every subcommand is reproducible byte for byte given
identical inputs and --seed, and none mutates its inputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import detect as det
from . import evaluation, explain, neural, synth
from .errors import NonFiniteLoss, UavadError
from .features import FeatureKind, build_dataset, concat_datasets, feature_spec
from .logdata import AnomalyType
from .logparser import load_annotations, parse_log
from .neural import ModelKind

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_KIND_BY_TYPE = {
    AnomalyType.VIBRATION: ModelKind.VIBRATION,
    AnomalyType.ATTITUDE: ModelKind.ATTITUDE,
    AnomalyType.COMPASS_INTERFERENCE: ModelKind.COMPASS,
}

_FEATURES_BY_KIND = {
    ModelKind.VIBRATION: FeatureKind.VIBRATION_XYZ,
    ModelKind.ATTITUDE: FeatureKind.ATTITUDE_DELTAS,
    ModelKind.COMPASS: FeatureKind.COMPASS_THROTTLE_MAG,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


def _anomaly_type(name: str) -> AnomalyType:
    try:
        return AnomalyType.from_name(name)
    except KeyError:
        choices = ", ".join(t.value for t in AnomalyType)
        raise UsageError(f"unknown anomaly type {name!r} (choose from {choices})") from None


def _model_kind(anomaly: AnomalyType) -> ModelKind:
    kind = _KIND_BY_TYPE.get(anomaly)
    if kind is None:
        raise UsageError(f"no autoencoder preset for anomaly type {anomaly.value}")
    return kind


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="global RNG seed")
    common.add_argument("--stride", type=int, default=1, help="window stride in samples")

    parser = _Parser(prog="uavad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse a dataflash text log")
    p.add_argument("log", help="path to the log file")
    p.add_argument("--strict", action="store_true", help="abort on the first bad line")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--type", required=True, help="anomaly type to inject")
    p.add_argument("--n-normal", type=int, required=True)
    p.add_argument("--n-anomalous", type=int, required=True)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--duration", type=int, default=1000, help="samples per log")
    p.add_argument("--period", type=int, default=10_000, help="sample period in us")

    p = sub.add_parser("train", parents=[common], help="train an autoencoder preset")
    p.add_argument("--type", required=True, help="anomaly type to model")
    p.add_argument("--logs", required=True, help="directory of .log files")
    p.add_argument("--annotations", required=True, help="annotation JSON file")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--val-fraction", type=float, default=0.2)

    p = sub.add_parser("detect", parents=[common], help="run a model over one log")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--log", required=True, help="log file to scan")
    p.add_argument("--report", required=True, help="directory for the report")

    p = sub.add_parser("rules", parents=[common], help="run documented-threshold rules")
    p.add_argument("--type", required=True, help="anomaly type")
    p.add_argument("--log", required=True, help="log file to scan")
    p.add_argument("--limit", type=float, default=None, help="override the rule limit")

    p = sub.add_parser("eval", parents=[common], help="evaluate over a corpus")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--corpus", required=True, help="corpus directory (logs/ inside)")
    p.add_argument("--annotations", required=True, help="annotation JSON file")
    p.add_argument("--rules", action="store_true", help="also evaluate the matching rule")
    p.add_argument("--out", default=None, help="directory for the JSON report")
    return parser


def _load_corpus_logs(corpus_dir: str):
    logs_dir = Path(corpus_dir) / "logs"
    if not logs_dir.is_dir():
        logs_dir = Path(corpus_dir)
    paths = sorted(logs_dir.glob("*.log"))
    if not paths:
        raise UavadError(f"no .log files under {corpus_dir!r}")
    logs = []
    for path in paths:
        log, _report = parse_log(path.read_text(), strict=False, log_id=path.stem)
        logs.append(log)
    return logs


def _rules_for_type(anomaly: AnomalyType, limit: float | None) -> list[det.RuleSpec]:
    primary = {
        AnomalyType.VIBRATION: det.RuleKind.VIBRATION_THRESHOLD,
        AnomalyType.ATTITUDE: det.RuleKind.ATTITUDE_THRESHOLD,
        AnomalyType.COMPASS_INTERFERENCE: det.RuleKind.COMPASS_CORRELATION,
        AnomalyType.GPS_GLITCH: det.RuleKind.GPS_HDOP,
        AnomalyType.POWER: det.RuleKind.POWER_CORRELATION,
    }[anomaly]
    rules = [det.default_rule(primary, limit)]
    if anomaly is AnomalyType.VIBRATION:
        rules.append(det.default_rule(det.RuleKind.CLIP_COUNT))
    return rules


def _cmd_parse(args) -> int:
    text = Path(args.log).read_text()
    log, report = parse_log(text, strict=args.strict, log_id=Path(args.log).stem)
    print(f"parsed_lines: {report.parsed_lines}")
    print(f"skipped_lines: {report.skipped_lines}")
    for lineno, message in report.errors:
        print(f"  line {lineno}: {message}")
    print(f"messages: {', '.join(f'{m}({log.record_count(m)})' for m in log.schemas)}")
    return 0


def _cmd_synth(args) -> int:
    anomaly = _anomaly_type(args.type)
    corpus = synth.benchmark_suite(
        args.n_normal, args.n_anomalous, anomaly, args.seed,
        duration_samples=args.duration, sample_period_us=args.period,
    )
    synth.write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.logs)} logs and {len(corpus.annotations)} annotations to {args.out}")
    return 0


def _cmd_train(args) -> int:
    anomaly = _anomaly_type(args.type)
    kind = _model_kind(anomaly)
    spec = neural.preset(kind)
    logs = _load_corpus_logs(args.logs)
    annotations = load_annotations(Path(args.annotations).read_text())
    flagged = {a.log_id for a in annotations if a.anomaly_type is anomaly}
    clean = [log for log in logs if log.log_id not in flagged]
    logger.info("training on %d of %d logs (no %s annotations)",
                len(clean), len(logs), anomaly.value)
    fspec = feature_spec(_FEATURES_BY_KIND[kind])
    train_ds, val_ds = build_dataset(
        clean, fspec, spec.timesteps, stride=args.stride,
        val_fraction=args.val_fraction, seed=args.seed,
    )
    model = neural.train(spec, train_ds, val_ds, epochs=args.epochs, seed=args.seed)
    # threshold over every window of the training corpus, train and val alike
    det.calibrate_threshold(model, concat_datasets(train_ds, val_ds))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(neural.save_model(model))
    final_train, final_val = model.training_history[-1]
    print(f"trained {kind.value} model: {train_ds.samples} train / {val_ds.samples} val windows")
    print(f"final loss: train {final_train:.6f}"
          + (f" val {final_val:.6f}" if final_val is not None else ""))
    print(f"threshold: {model.threshold:.6g}")
    print(f"model written to {out}")
    return 0


def _cmd_detect(args) -> int:
    model = neural.load_model(Path(args.model).read_text())
    log, _report = parse_log(Path(args.log).read_text(), strict=False,
                             log_id=Path(args.log).stem)
    fspec = feature_spec(det.feature_kind_for_model(model))
    spans, verdict, max_score = det.detect_autoencoder(model, log, fspec, stride=args.stride)
    print(det.detection_to_json(spans, verdict, max_score))
    units = model.spec.loss.value
    explain.render_report(
        log, spans, explain.builtin_templates(), args.report,
        threshold=model.threshold, threshold_units=units,
    )
    logger.info("report written to %s", args.report)
    return 0


def _cmd_rules(args) -> int:
    anomaly = _anomaly_type(args.type)
    log, _report = parse_log(Path(args.log).read_text(), strict=False,
                             log_id=Path(args.log).stem)
    spans: list[det.DetectionSpan] = []
    verdict = False
    for rule in _rules_for_type(anomaly, args.limit):
        rule_spans, rule_verdict = det.rule_detect(log, rule)
        spans.extend(rule_spans)
        verdict = verdict or rule_verdict
    spans.sort(key=lambda s: (s.start_us, s.end_us))
    print(det.detection_to_json(spans, verdict))
    return 0


def _cmd_eval(args) -> int:
    model = neural.load_model(Path(args.model).read_text())
    anomaly = det.model_anomaly_type(model)
    logs = _load_corpus_logs(args.corpus)
    annotations = load_annotations(Path(args.annotations).read_text())
    labeled = {a.log_id for a in annotations if a.anomaly_type is anomaly}
    fspec = feature_spec(det.feature_kind_for_model(model))

    labels, lstm_preds, scores = [], [], []
    rule_preds = []
    rules = _rules_for_type(anomaly, None) if args.rules else []
    for log in logs:
        labels.append(log.log_id in labeled)
        spans, verdict, max_score = det.detect_autoencoder(
            model, log, fspec, stride=args.stride
        )
        lstm_preds.append(det.classify_log(spans))
        scores.append(max_score)
        if args.rules:
            combined: list[det.DetectionSpan] = []
            for rule in rules:
                rule_spans, _ = det.rule_detect(log, rule)
                combined.extend(rule_spans)
            rule_preds.append(det.classify_log(combined))

    lstm_report = evaluation.prf1(lstm_preds, labels)
    lstm_report.roc_points, lstm_report.auc = evaluation.roc_auc(scores, labels)
    reports = {"LSTM": lstm_report}
    if args.rules:
        reports["Rule"] = evaluation.prf1(rule_preds, labels)
    print(evaluation.format_table(reports))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(evaluation.report_to_json(reports) + "\n")
        logger.info("metrics written to %s", out / "eval.json")
    return 0


_COMMANDS = {
    "parse": _cmd_parse,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "rules": _cmd_rules,
    "eval": _cmd_eval,
}


def run(argv: list[str] | None = None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("RESAM_LOG_LEVEL", "warn"), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NonFiniteLoss as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 3
    except (UavadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
