"""Binary precision/recall/F1 and the evaluation report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


def confusion_counts(y_true: Sequence[int], y_pred: Sequence[int]) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with 1 = positive."""
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} labels vs {len(y_pred)} predictions")
    tp = fp = fn = tn = 0
    for truth, pred in zip(y_true, y_pred):
        if pred == 1 and truth == 1:
            tp += 1
        elif pred == 1 and truth == 0:
            fp += 1
        elif pred == 0 and truth == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def precision_recall_f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    return precision_recall_f1(tp, fp, fn)[2]


@dataclass(frozen=True)
class EvalReport:
    """Scores pooled over runs (micro, so f1 is exactly the harmonic mean of
    the reported precision and recall) plus the per-run F1 list and its
    plain mean."""

    f1: float
    precision: float
    recall: float
    runs: int
    per_run_f1: list[float]
    f1_mean_runs: float
    dataset_manifest_hash: str
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.per_run_f1) != self.runs:
            raise ValueError("per_run_f1 length must equal runs")

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "runs": self.runs,
            "per_run_f1": self.per_run_f1,
            "f1_mean_runs": self.f1_mean_runs,
            "dataset_manifest_hash": self.dataset_manifest_hash,
            "details": self.details,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
