"""Confusion-matrix metrics and inverse-frequency class weights.

Metrics with an empty denominator are reported as undefined (None), never as
a silent zero: on a heavily imbalanced dataset an all-negative predictor has
no meaningful precision, and collapsing that to 0 hides the failure mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    """Metric fractions in [0, 1]; None marks an undefined metric."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def percents(self) -> dict[str, str]:
        """One-decimal percentage strings; undefined metrics map to ''."""
        return {
            name: format_percent(getattr(self, name))
            for name in ("accuracy", "precision", "recall", "f1")
        }


def format_percent(value: float | None) -> str:
    return "" if value is None else f"{value * 100:.1f}"


def confusion_from_pairs(truth: Sequence[int], pred: Sequence[int]) -> ConfusionCounts:
    """Count TP/FP/TN/FN from parallel truth/prediction label sequences.

    Labels are 0 (negative) and 1 (positive).
    """
    if len(truth) != len(pred):
        raise ValueError(f"length mismatch: {len(truth)} truths vs {len(pred)} predictions")
    tp = fp = tn = fn = 0
    for t, p in zip(truth, pred):
        if t not in (0, 1) or p not in (0, 1):
            raise ValueError(f"unknown label in pair ({t!r}, {p!r}); expected 0 or 1")
        if t == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        else:
            if p == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(c: ConfusionCounts) -> MetricsReport:
    """Accuracy, precision, recall and F1 from confusion counts."""
    accuracy = (c.tp + c.tn) / c.total if c.total else None
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class ClassWeights:
    """Inverse-frequency weights: w = total / class count."""

    n0: int
    n1: int

    def __post_init__(self):
        if self.n0 < 1 or self.n1 < 1:
            raise ValueError("class counts must be >= 1")

    @property
    def w0(self) -> float:
        return (self.n0 + self.n1) / self.n0

    @property
    def w1(self) -> float:
        return (self.n0 + self.n1) / self.n1

    def exact(self) -> tuple[Fraction, Fraction]:
        """Exact weights; w0*n0 == w1*n1 == n0+n1 holds identically here."""
        total = self.n0 + self.n1
        return Fraction(total, self.n0), Fraction(total, self.n1)


def class_weights(n0: int, n1: int) -> ClassWeights:
    """Weights for negatives (w0) and positives (w1) from training counts."""
    return ClassWeights(n0=n0, n1=n1)
