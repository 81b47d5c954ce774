"""Confusion-matrix metrics and the class-size-weighted F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from senhar.errors import ContractError


@dataclass
class MetricsReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    avg_f1: float
    confusion: np.ndarray  # rows: truth, columns: prediction
    support: np.ndarray

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "avg_f1": self.avg_f1,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "support": self.support.tolist(),
            "confusion": self.confusion.tolist(),
        }


def averaged_f1(f1_scores, counts) -> float:
    """sum(N_i * F1_i) / sum(N_i)."""
    f1 = np.asarray(f1_scores, dtype=np.float64)
    n = np.asarray(counts, dtype=np.float64)
    total = n.sum()
    return float((n * f1).sum() / total) if total > 0 else 0.0


def confusion_matrix(predictions, truth, c: int) -> np.ndarray:
    cm = np.zeros((c, c), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth, dtype=np.int64), np.asarray(predictions, dtype=np.int64)), 1)
    return cm


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def metrics(predictions, truth, c: int) -> MetricsReport:
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.shape != true.shape:
        raise ContractError(f"predictions ({pred.size}) and truth ({true.size}) differ in length")
    if pred.size and (min(pred.min(), true.min()) < 0 or max(pred.max(), true.max()) >= c):
        raise ContractError(f"labels must lie in [0, {c})")
    cm = confusion_matrix(pred, true, c)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    precision = _safe_ratio(tp, predicted.astype(np.float64))
    recall = _safe_ratio(tp, support.astype(np.float64))
    f1 = _safe_ratio(2 * precision * recall, precision + recall)
    f1[support == 0] = 0.0
    accuracy = float(tp.sum() / pred.size) if pred.size else 0.0
    return MetricsReport(accuracy, precision, recall, f1, averaged_f1(f1, support), cm, support)
