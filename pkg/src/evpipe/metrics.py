"""Confusion matrices, accuracy / precision / recall / F1, and benchmark tables.

Per class ``c`` the one-vs-rest counts are

    TP = cm[c, c]          FP = column sum - TP
    FN = row sum - TP      TN = total - TP - FP - FN

and precision = TP / (TP + FP), recall = TP / (TP + FN),
F1 = 2 * P * R / (P + R), each defined as 0 when its denominator is 0.
Report-level precision, recall and F1 are unweighted means over the classes
that occur in the truth or the predictions (a present class with an undefined
ratio contributes 0); accuracy is trace / total.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np

from .ingest import NUM_CLASSES


class MetricsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise MetricsError(f"confusion matrix must be square, got shape {c.shape}")
        if (c < 0).any():
            raise MetricsError("confusion matrix entries must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @classmethod
    def zeros(cls, n_classes: int = NUM_CLASSES) -> "ConfusionMatrix":
        return cls(np.zeros((n_classes, n_classes), dtype=np.int64))

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


def confusion_from_pairs(pairs: Iterable[Tuple[int, int]], n_classes: int = NUM_CLASSES) -> ConfusionMatrix:
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for true, pred in pairs:
        true, pred = int(true), int(pred)
        if not (0 <= true < n_classes and 0 <= pred < n_classes):
            raise MetricsError(f"label out of range: ({true}, {pred}) not in 0..{n_classes - 1}")
        counts[true, pred] += 1
    return ConfusionMatrix(counts)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2 * recall * precision / s if s else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: Tuple[ClassMetrics, ...]

    def to_json(self) -> dict:
        d = asdict(self)
        d["per_class"] = [asdict(c) for c in self.per_class]
        return d


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    total = cm.total
    if total == 0:
        raise MetricsError("cannot compute metrics on an empty confusion matrix")
    c = cm.counts
    tp = np.diag(c)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    tn = total - tp - fp - fn
    per_class = []
    for k in range(cm.n_classes):
        p = _ratio(int(tp[k]), int(tp[k] + fp[k]))
        r = _ratio(int(tp[k]), int(tp[k] + fn[k]))
        per_class.append(ClassMetrics(int(tp[k]), int(fp[k]), int(fn[k]), int(tn[k]), p, r, f1_score(p, r)))
    active = [m for m in per_class if m.tp + m.fp + m.fn > 0]
    n = len(active)
    return MetricsReport(
        accuracy=int(tp.sum()) / total,
        precision=sum(m.precision for m in active) / n,
        recall=sum(m.recall for m in active) / n,
        f1=sum(m.f1 for m in active) / n,
        per_class=tuple(per_class),
    )


def _ordered(reports: Mapping[str, MetricsReport]) -> List[Tuple[str, MetricsReport]]:
    return sorted(reports.items(), key=lambda kv: (-kv[1].accuracy, kv[0]))


def render_report(reports: Mapping[str, MetricsReport]) -> str:
    """Fixed-width table, one row per model, best accuracy first."""
    width = max([len("Model")] + [len(name) for name in reports])
    lines = [f"{'Model':<{width}}  {'Precision':>9}  {'Recall':>9}  {'F1':>9}  {'ACC':>9}"]
    for name, r in _ordered(reports):
        lines.append(f"{name:<{width}}  {r.precision:>9.3f}  {r.recall:>9.3f}  {r.f1:>9.3f}  {r.accuracy:>9.3f}")
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Mapping[str, MetricsReport]) -> str:
    return json.dumps({name: r.to_json() for name, r in _ordered(reports)}, indent=2) + "\n"


def parse_predictions(text: str, n_classes: int = NUM_CLASSES) -> List[Tuple[int, int]]:
    """Parse ``true predicted`` lines; blank and ``#`` lines are skipped.

    Raises :class:`MetricsError` with the 1-based line number on bad input.
    """
    pairs = []
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        try:
            if len(parts) != 2:
                raise ValueError
            true, pred = int(parts[0]), int(parts[1])
        except ValueError:
            raise MetricsError(f"line {no}: malformed prediction {line!r}, expected 'true predicted'") from None
        if not (0 <= true < n_classes and 0 <= pred < n_classes):
            raise MetricsError(f"line {no}: label out of range (0..{n_classes - 1})")
        pairs.append((true, pred))
    return pairs


def format_predictions(pairs: Iterable[Tuple[int, int]]) -> str:
    return "".join(f"{t} {p}\n" for t, p in pairs)


def metrics_dict(report: MetricsReport) -> Dict[str, float]:
    return {"accuracy": report.accuracy, "precision": report.precision,
            "recall": report.recall, "f1": report.f1}
