"""Gesture classification metrics and the replay evaluation report."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Gesture

CLASS_ORDER = (Gesture.HOLD, Gesture.TOUCH, Gesture.POINT, Gesture.OUT_OF_VIEW)


@dataclass
class ClassMetrics:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    support: int


@dataclass
class LatencyStats:
    count: int
    mean_ms: float
    sd_ms: float


@dataclass
class EvalReport:
    accuracy: Optional[float] = None
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)
    macro_f1: Optional[float] = None
    confusion_pct: Optional[list[list[float]]] = None  # row = actual, row-normalized %
    confusion_counts: Optional[list[list[int]]] = None
    latency_by_kind: dict[str, LatencyStats] = field(default_factory=dict)
    model_latency: dict[str, LatencyStats] = field(default_factory=dict)
    throughput_fps: Optional[float] = None
    n_frames: int = 0
    n_trace_events: int = 0
    n_descriptions: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                name: {"precision": m.precision, "recall": m.recall,
                       "f1": m.f1, "support": m.support}
                for name, m in self.per_class.items()
            },
            "macro_f1": self.macro_f1,
            "class_order": [c.value for c in CLASS_ORDER],
            "confusion_pct": self.confusion_pct,
            "confusion_counts": self.confusion_counts,
            "latency_by_kind": {
                k: {"count": s.count, "mean_ms": s.mean_ms, "sd_ms": s.sd_ms}
                for k, s in self.latency_by_kind.items()
            },
            "model_latency": {
                k: {"count": s.count, "mean_ms": s.mean_ms, "sd_ms": s.sd_ms}
                for k, s in self.model_latency.items()
            },
            "throughput_fps": self.throughput_fps,
            "n_frames": self.n_frames,
            "n_trace_events": self.n_trace_events,
            "n_descriptions": self.n_descriptions,
        }


def latency_stats(values_ms: Sequence[float]) -> LatencyStats:
    arr = np.asarray(values_ms, dtype=np.float64)
    if arr.size == 0:
        return LatencyStats(0, 0.0, 0.0)
    return LatencyStats(int(arr.size), float(arr.mean()),
                        float(arr.std(ddof=0)))


def evaluate(predictions: Sequence[Gesture],
             ground_truth: Sequence[Gesture]) -> EvalReport:
    """One-vs-rest precision/recall/F1 per class plus a row-normalized
    confusion matrix.

    Classes absent from both ground truth and predictions get undefined
    (None) metrics and are excluded from the macro average.
    """
    if len(predictions) != len(ground_truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions "
                         f"vs {len(ground_truth)} labels")
    idx = {c: i for i, c in enumerate(CLASS_ORDER)}
    k = len(CLASS_ORDER)
    counts = np.zeros((k, k), dtype=np.int64)
    for gt, pred in zip(ground_truth, predictions):
        counts[idx[gt], idx[pred]] += 1

    n = counts.sum()
    report = EvalReport()
    report.confusion_counts = counts.tolist()
    report.accuracy = float(np.trace(counts) / n) if n else None

    pct = np.zeros((k, k), dtype=np.float64)
    for i in range(k):
        row = counts[i].sum()
        if row > 0:
            pct[i] = counts[i] / row * 100.0
    report.confusion_pct = pct.tolist()

    f1s = []
    for i, cls in enumerate(CLASS_ORDER):
        tp = counts[i, i]
        support = int(counts[i].sum())
        predicted = int(counts[:, i].sum())
        if support == 0 and predicted == 0:
            report.per_class[cls.value] = ClassMetrics(None, None, None, 0)
            continue
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if (precision + recall) else 0.0)
        report.per_class[cls.value] = ClassMetrics(
            float(precision), float(recall), float(f1), support)
        f1s.append(f1)
    report.macro_f1 = float(np.mean(f1s)) if f1s else None
    return report
