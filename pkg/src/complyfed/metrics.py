"""Confusion-matrix classification metrics: accuracy, precision, recall, F1.

Aggregate precision/recall/F1 are support-weighted means of the per-class
values, which makes weighted recall algebraically equal to accuracy. Classes
with zero support or a zero denominator contribute 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .models import EmptyDatasetError, ModelSpec, forward_loss
from .params import ParamVector


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: tuple[ClassMetrics, ...]
    confusion: np.ndarray  # (classes, classes) ints; rows = true, cols = predicted


def confusion_matrix(
    true_labels: np.ndarray, predictions: np.ndarray, num_classes: int
) -> np.ndarray:
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (true_labels, predictions), 1)
    return matrix


def metrics_from_confusion(confusion: np.ndarray, macro: bool = False) -> MetricsReport:
    confusion = np.asarray(confusion, dtype=np.int64)
    total = int(confusion.sum())
    if total == 0:
        raise EmptyDatasetError("confusion matrix counts no samples")
    diag = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1).astype(np.float64)
    predicted = confusion.sum(axis=0).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, diag / np.maximum(predicted, 1), 0.0)
        recall = np.where(support > 0, diag / np.maximum(support, 1), 0.0)
        pr_sum = precision + recall
        f1 = np.where(pr_sum > 0, 2 * precision * recall / np.maximum(pr_sum, 1e-300), 0.0)
    per_class = tuple(
        ClassMetrics(float(p), float(r), float(f), int(s))
        for p, r, f, s in zip(precision, recall, f1, support)
    )
    if macro:
        agg_precision = float(precision.mean())
        agg_recall = float(recall.mean())
        agg_f1 = float(f1.mean())
    else:
        # support @ metric / total keeps e.g. the perfect predictor exact.
        agg_precision = float(support @ precision / total)
        agg_recall = float(support @ recall / total)
        agg_f1 = float(support @ f1 / total)
    return MetricsReport(
        accuracy=float(diag.sum() / total),
        precision=agg_precision,
        recall=agg_recall,
        f1=agg_f1,
        per_class=per_class,
        confusion=confusion,
    )


def evaluate(
    spec: ModelSpec, params: ParamVector, eval_data: Dataset, macro: bool = False
) -> MetricsReport:
    """Metrics of argmax predictions (ties resolve to the lowest class index)."""
    if len(eval_data) == 0:
        raise EmptyDatasetError("evaluation dataset is empty")
    _, probs = forward_loss(spec, params, eval_data.features, eval_data.labels)
    predictions = probs.argmax(axis=1)
    confusion = confusion_matrix(eval_data.labels, predictions, spec.num_classes)
    return metrics_from_confusion(confusion, macro=macro)
