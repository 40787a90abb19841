"""Accuracy, macro precision/recall, and the confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyBatchError, SpecError
from ..signals import Dataset
from .model import Model, forward_batch


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    confusion: tuple[tuple[int, ...], ...]  # rows = true class, cols = predicted

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "confusion": [list(row) for row in self.confusion],
        }

    @staticmethod
    def from_dict(doc: dict) -> "EvaluationReport":
        return EvaluationReport(
            accuracy=float(doc["accuracy"]),
            macro_precision=float(doc["macro_precision"]),
            macro_recall=float(doc["macro_recall"]),
            confusion=tuple(tuple(int(v) for v in row) for row in doc["confusion"]),
        )


def evaluate(model: Model, ds: Dataset) -> EvaluationReport:
    """Score a dataset: argmax prediction per sample (first index wins ties),
    macro averages taken over all classes with empty denominators scoring 0."""
    if len(ds) == 0:
        raise EmptyBatchError("cannot evaluate on an empty dataset")
    if ds.class_count != model.spec.class_count:
        raise SpecError(
            f"dataset class_count {ds.class_count} != model class_count "
            f"{model.spec.class_count}"
        )
    probs, _ = forward_batch(model, ds.stacked())
    preds = probs.argmax(axis=1)
    labels = ds.labels()
    c = ds.class_count
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)

    correct = np.trace(confusion)
    total = confusion.sum()
    per_class_prec = np.zeros(c)
    per_class_rec = np.zeros(c)
    for k in range(c):
        col = confusion[:, k].sum()
        row = confusion[k, :].sum()
        per_class_prec[k] = confusion[k, k] / col if col > 0 else 0.0
        per_class_rec[k] = confusion[k, k] / row if row > 0 else 0.0
    return EvaluationReport(
        accuracy=float(correct / total),
        macro_precision=float(per_class_prec.mean()),
        macro_recall=float(per_class_rec.mean()),
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
    )


def accuracy_on(model: Model, ds: Dataset) -> float:
    return evaluate(model, ds).accuracy
