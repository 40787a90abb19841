"""Evaluation report arithmetic on hand-built predictors."""

from __future__ import annotations

import numpy as np
import pytest

from coreselect.errors import EmptyBatchError, SpecError
from coreselect.nn import (
    ArchitectureSpec,
    Conv1d,
    DenseSoftmax,
    EvaluationReport,
    GlobalAvgPool,
    build_model,
    evaluate,
)
from coreselect.signals import ClassLabel, Dataset, Signal


def constant_dataset(values_by_label: dict[int, float], n: int, classes: int, length: int = 8) -> Dataset:
    sigs = []
    for label, value in values_by_label.items():
        for i in range(n):
            sigs.append(
                Signal(np.full(length, value), ClassLabel(label, f"c{label}"), f"c{label}-{i}")
            )
    return Dataset(tuple(sigs), class_count=classes)


def sign_model(length: int = 8):
    """Perfect two-class predictor: pass-through conv then +/- readout, so
    positive-mean signals land in class 0 and negative-mean in class 1."""
    spec = ArchitectureSpec(length, (Conv1d(1, 1), GlobalAvgPool(), DenseSoftmax(2)))
    model = build_model(spec, seed=0)
    model = model.with_param(0, "weight", np.ones((1, 1, 1)))
    model = model.with_param(0, "bias", np.zeros(1))
    model = model.with_param(2, "weight", np.array([[1.0], [-1.0]]))
    model = model.with_param(2, "bias", np.zeros(2))
    return model


def biased_model(classes: int, favored: int, length: int = 8):
    """Predicts the favored class for every input."""
    spec = ArchitectureSpec(length, (Conv1d(1, 1), GlobalAvgPool(), DenseSoftmax(classes)))
    model = build_model(spec, seed=0)
    model = model.with_param(0, "weight", np.zeros((1, 1, 1)))
    model = model.with_param(0, "bias", np.zeros(1))
    model = model.with_param(2, "weight", np.zeros((classes, 1)))
    bias = np.zeros(classes)
    bias[favored] = 1.0
    model = model.with_param(2, "bias", bias)
    return model


def test_perfect_predictor_scores_one():
    ds = constant_dataset({0: 0.5, 1: -0.5}, n=6, classes=2)
    report = evaluate(sign_model(), ds)
    assert report.accuracy == 1.0
    assert report.macro_precision == 1.0
    assert report.macro_recall == 1.0
    assert report.confusion == ((6, 0), (0, 6))


def test_constant_predictor_macro_averages():
    # always predicts class 0 on a balanced 4-class set: accuracy 1/4,
    # recall (1,0,0,0) -> 0.25, precision (0.25,0,0,0) -> 0.0625
    ds = constant_dataset({0: 0.1, 1: 0.2, 2: 0.3, 3: 0.4}, n=5, classes=4)
    report = evaluate(biased_model(4, favored=0), ds)
    assert report.accuracy == 0.25
    assert report.macro_recall == 0.25
    assert report.macro_precision == 0.0625
    assert report.confusion == ((5, 0, 0, 0), (5, 0, 0, 0), (5, 0, 0, 0), (5, 0, 0, 0))


def test_confusion_orientation_rows_are_truth():
    # model always answers class 1; the single class-0 sample must land at
    # row 0 (true), column 1 (predicted)
    ds = Dataset(
        (
            Signal(np.zeros(8), ClassLabel(0, "a"), "s0"),
            Signal(np.zeros(8), ClassLabel(1, "b"), "s1"),
        ),
        class_count=2,
    )
    report = evaluate(biased_model(2, favored=1), ds)
    assert report.confusion == ((0, 1), (0, 1))
    assert report.accuracy == 0.5


def test_sample_order_invariance():
    rng = np.random.default_rng(3)
    sigs = []
    for i in range(12):
        label = i % 2
        samples = (0.5 if label == 0 else -0.5) + 0.3 * rng.standard_normal(8)
        sigs.append(Signal(samples, ClassLabel(label, f"c{label}"), f"s{i}"))
    ds = Dataset(tuple(sigs), class_count=2)
    shuffled = Dataset(tuple(sigs[::-1]), class_count=2)
    model = sign_model()
    assert evaluate(model, ds) == evaluate(model, shuffled)


def test_report_serialization_round_trip():
    report = EvaluationReport(
        accuracy=0.8125,
        macro_precision=0.75,
        macro_recall=0.7083333333333334,
        confusion=((10, 2), (1, 3)),
    )
    again = EvaluationReport.from_dict(report.to_dict())
    assert again == report


def test_evaluate_rejects_bad_inputs():
    model = sign_model()
    with pytest.raises(EmptyBatchError):
        evaluate(model, Dataset((), class_count=2))
    ds = Dataset((Signal(np.zeros(8), ClassLabel(0, "a"), "x"),), class_count=3)
    with pytest.raises(SpecError):
        evaluate(model, ds)


def test_tie_goes_to_lowest_index():
    # zero logits everywhere: argmax must pick class 0 for every sample
    ds = constant_dataset({0: 0.3, 1: 0.3}, n=4, classes=2)
    spec = ArchitectureSpec(8, (Conv1d(1, 1), GlobalAvgPool(), DenseSoftmax(2)))
    model = build_model(spec, seed=0)
    for li in (0, 2):
        lp = model.params[li]
        model = model.with_param(li, "weight", np.zeros_like(lp.weight))
        model = model.with_param(li, "bias", np.zeros_like(lp.bias))
    report = evaluate(model, ds)
    assert report.confusion == ((4, 0), (4, 0))
