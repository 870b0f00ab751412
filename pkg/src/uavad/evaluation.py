"""Detection metrics: precision/recall/accuracy/F1, ROC points, and AUC."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, OneClassOnly


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    accuracy: float
    f1: float
    roc_points: list[tuple[float, float]] | None = None
    auc: float | None = None


def prf1(predictions: list[bool], labels: list[bool]) -> EvalReport:
    """Counts and rates for boolean predictions against boolean labels.

    Degenerate conventions: with no positive predictions, precision is 1.0
    when nothing was missed (fn == 0) and 0.0 otherwise; recall mirrors
    this when there are no positive labels.  F1 is 0 when P + R == 0.
    """
    if len(predictions) != len(labels):
        raise LengthMismatch("predictions and labels must be equally long")
    if not predictions:
        raise EmptyInput("cannot evaluate zero predictions")
    pred = np.asarray(predictions, dtype=bool)
    lab = np.asarray(labels, dtype=bool)
    tp = int(np.sum(pred & lab))
    fp = int(np.sum(pred & ~lab))
    tn = int(np.sum(~pred & ~lab))
    fn = int(np.sum(~pred & lab))

    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 1.0 if fn == 0 else 0.0
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 1.0 if fp == 0 else 0.0
    accuracy = (tp + tn) / len(pred)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return EvalReport(tp, fp, tn, fn, precision, recall, accuracy, f1)


def _check_two_classes(labels: np.ndarray):
    if labels.all() or not labels.any():
        raise OneClassOnly("ROC needs at least one positive and one negative label")


def roc_auc(scores, labels) -> tuple[list[tuple[float, float]], float]:
    """ROC points and trapezoidal AUC.

    Thresholds sweep the distinct score values plus +inf, each classifying
    score > threshold; points are sorted by FPR and augmented with (0,0)
    and (1,1).  With strict > and these endpoints the trapezoid area equals
    the Mann-Whitney statistic with ties counted half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatch("scores and labels must be equally long vectors")
    _check_two_classes(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos

    thresholds = np.unique(scores)  # ascending
    points = {(0.0, 0.0), (1.0, 1.0)}
    for thr in thresholds:
        flagged = scores > thr
        tpr = float(np.sum(flagged & labels)) / n_pos
        fpr = float(np.sum(flagged & ~labels)) / n_neg
        points.add((fpr, tpr))
    ordered = sorted(points)
    xs = np.array([p[0] for p in ordered])
    ys = np.array([p[1] for p in ordered])
    auc = float(np.trapezoid(ys, xs))
    return ordered, auc


def auc_oracle(scores, labels) -> float:
    """Mann-Whitney AUC: fraction of (anomalous, normal) pairs ranked
    correctly, ties counted 0.5.  Independent check for roc_auc."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatch("scores and labels must be equally long vectors")
    _check_two_classes(labels)
    pos = scores[labels]
    neg = scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (len(pos) * len(neg)))


def report_to_json(reports: dict[str, EvalReport]) -> str:
    doc = {}
    for name, r in reports.items():
        doc[name] = {
            "tp": r.tp, "fp": r.fp, "tn": r.tn, "fn": r.fn,
            "precision": r.precision, "recall": r.recall,
            "accuracy": r.accuracy, "f1": r.f1,
        }
        if r.auc is not None:
            doc[name]["auc"] = r.auc
            doc[name]["roc_points"] = [list(p) for p in r.roc_points]
    return json.dumps(doc, indent=2, sort_keys=True)


def format_table(reports: dict[str, EvalReport]) -> str:
    """Aligned text table, one metric per row and one detector per column."""
    names = list(reports)
    width = max(9, *(len(n) for n in names)) + 2
    lines = ["Metric".ljust(11) + "".join(n.rjust(width) for n in names)]
    rows = [
        ("Precision", lambda r: r.precision),
        ("Recall", lambda r: r.recall),
        ("Accuracy", lambda r: r.accuracy),
        ("F1", lambda r: r.f1),
    ]
    for label, getter in rows:
        cells = "".join(f"{getter(reports[n]):.2f}".rjust(width) for n in names)
        lines.append(label.ljust(11) + cells)
    if any(reports[n].auc is not None for n in names):
        cells = "".join(
            ("-" if reports[n].auc is None else f"{reports[n].auc:.3f}").rjust(width)
            for n in names
        )
        lines.append("AUC".ljust(11) + cells)
    return "\n".join(lines)
