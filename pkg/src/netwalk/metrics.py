"""Evaluation metrics and dataset splitting.

Rates follow the usual surveillance conventions: the false-alarm rate
divides false positives by the number of normal samples, the miss rate
divides false negatives by the number of abnormal samples (overall and per
abnormality type), and the total error rate divides all wrong verdicts by
the sample count. A rate whose denominator is zero is reported as None,
never as 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

NORMAL = "normal"
ABNORMAL_TYPES = ("I", "II", "III")


@dataclass
class EvalReport:
    """Metric bundle for one evaluation run."""

    task: str
    total: int
    ter: float
    fa_rate: float | None = None
    miss_rate: float | None = None
    miss_by_type: dict[str, float | None] = field(default_factory=dict)
    per_class: dict[str, dict[str, float | None]] = field(default_factory=dict)
    classes: list[str] = field(default_factory=list)
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)


def _rate(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def _confusion(
    truth: Sequence[str], predicted: Sequence[str], classes: list[str]
) -> dict[str, dict[str, int]]:
    table = {t: {p: 0 for p in classes} for t in classes}
    for t, p in zip(truth, predicted):
        table[t][p] += 1
    return table


def abnormality_metrics(
    predicted: Sequence[str], truth: Sequence[str]
) -> EvalReport:
    """Binary detection metrics with per-type misses and a typed confusion table.

    Labels are ``normal`` or an abnormality type; any non-normal prediction
    counts as a flag for the binary rates.
    """
    if len(predicted) != len(truth):
        raise ValueError("predictions and ground truth differ in length")
    classes = [NORMAL, *ABNORMAL_TYPES]
    for name, labels in (("prediction", predicted), ("ground truth", truth)):
        for v in labels:
            if v not in classes:
                raise ValueError(f"unknown {name} label {v!r}")

    pred_flag = np.asarray([p != NORMAL for p in predicted])
    true_flag = np.asarray([t != NORMAL for t in truth])
    n_pos = int(true_flag.sum())
    n_neg = len(truth) - n_pos
    false_alarms = int((pred_flag & ~true_flag).sum())
    misses = int((~pred_flag & true_flag).sum())

    miss_by_type: dict[str, float | None] = {}
    for kind in ABNORMAL_TYPES:
        members = [k for k, t in enumerate(truth) if t == kind]
        missed = sum(1 for k in members if not pred_flag[k])
        miss_by_type[kind] = _rate(missed, len(members))

    return EvalReport(
        task="abnormality",
        total=len(truth),
        ter=(false_alarms + misses) / len(truth) if truth else 0.0,
        fa_rate=_rate(false_alarms, n_neg),
        miss_rate=_rate(misses, n_pos),
        miss_by_type=miss_by_type,
        classes=classes,
        confusion=_confusion(truth, predicted, classes),
    )


def group_metrics(
    predicted: Sequence[str], truth: Sequence[str], classes: Sequence[str] | None = None
) -> EvalReport:
    """One-vs-rest miss/false-alarm rates per class plus the overall TER."""
    if len(predicted) != len(truth):
        raise ValueError("predictions and ground truth differ in length")
    names = sorted(set(truth)) if classes is None else list(classes)
    for name, labels in (("prediction", predicted), ("ground truth", truth)):
        for v in labels:
            if v not in names:
                raise ValueError(f"unknown {name} label {v!r}")

    wrong = sum(1 for p, t in zip(predicted, truth) if p != t)
    per_class: dict[str, dict[str, float | None]] = {}
    for c in names:
        in_class = [k for k, t in enumerate(truth) if t == c]
        out_class = [k for k, t in enumerate(truth) if t != c]
        missed = sum(1 for k in in_class if predicted[k] != c)
        claimed = sum(1 for k in out_class if predicted[k] == c)
        per_class[c] = {
            "miss": _rate(missed, len(in_class)),
            "fa": _rate(claimed, len(out_class)),
        }
    return EvalReport(
        task="group",
        total=len(truth),
        ter=wrong / len(truth) if truth else 0.0,
        per_class=per_class,
        classes=names,
        confusion=_confusion(truth, predicted, names),
    )


def split_dataset(
    samples: Sequence,
    train_fraction: float,
    seed: int,
    label_of: Callable | None = None,
) -> tuple[list[int], list[int]]:
    """Stratified index split.

    Per class, round(n * train_fraction) samples go to training (half-up
    rounding, clamped so both sides stay non-empty for classes of two or
    more). Classes with fewer than two samples stay in training entirely,
    with a warning.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train fraction must lie strictly between 0 and 1")
    get = label_of or (lambda s: s.label)
    rng = np.random.default_rng(seed)
    by_class: dict[str, list[int]] = {}
    for k, s in enumerate(samples):
        by_class.setdefault(get(s), []).append(k)

    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < 2:
            log.warning("class %r has %d sample(s); kept in training", label, len(members))
            train_idx.extend(members)
            continue
        order = rng.permutation(len(members))
        n_train = int(len(members) * train_fraction + 0.5)
        n_train = min(max(n_train, 1), len(members) - 1)
        for pos, o in enumerate(order):
            (train_idx if pos < n_train else test_idx).append(members[o])
    return sorted(train_idx), sorted(test_idx)


# ---- ROC over sweep scores ----

def roc_points(
    scores: Sequence[float], truth: Sequence[bool]
) -> list[tuple[float, float, float]]:
    """(threshold, fpr, tpr) rows for the rule ``score > threshold``.

    Thresholds sweep the distinct scores plus an above-max sentinel, in
    increasing order, so both rates are non-increasing down the list.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(truth, dtype=bool)
    if len(s) != len(y):
        raise ValueError("scores and truth differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative samples")
    rows = []
    for threshold in [*np.unique(s), float(np.max(s)) + 1.0]:
        flag = s > threshold
        rows.append(
            (
                float(threshold),
                float((flag & ~y).sum() / n_neg),
                float((flag & y).sum() / n_pos),
            )
        )
    return rows


def roc_auc(points: list[tuple[float, float, float]]) -> float:
    """Trapezoidal area under the (fpr, tpr) curve, endpoints included."""
    pts = sorted({(fpr, tpr) for _, fpr, tpr in points} | {(0.0, 0.0), (1.0, 1.0)})
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def render_report(report: EvalReport) -> str:
    """Aligned plain-text table for a report, percentages to one decimal."""

    def pct(v: float | None) -> str:
        return "n/a" if v is None else f"{100.0 * v:5.1f}"

    lines: list[str] = []
    if report.task == "abnormality":
        lines.append(f"{'samples':<22}{report.total:>8}")
        lines.append(f"{'FA (%)':<22}{pct(report.fa_rate):>8}")
        for kind in ABNORMAL_TYPES:
            lines.append(f"{'Miss ' + kind + ' (%)':<22}{pct(report.miss_by_type.get(kind)):>8}")
        lines.append(f"{'Miss total (%)':<22}{pct(report.miss_rate):>8}")
        lines.append(f"{'TER (%)':<22}{pct(report.ter):>8}")
    else:
        lines.append(f"{'samples':<22}{report.total:>8}")
        lines.append(f"{'class':<14}{'Miss (%)':>10}{'FA (%)':>10}")
        for c in report.classes:
            rates = report.per_class.get(c, {})
            lines.append(f"{c:<14}{pct(rates.get('miss')):>10}{pct(rates.get('fa')):>10}")
        lines.append(f"{'TER (%)':<22}{pct(report.ter):>8}")
    return "\n".join(lines) + "\n"
