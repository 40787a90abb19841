"""Core-set selection for incoming batches.

Every incorrectly classified sample is kept outright. The remaining budget is
spread evenly over (class, metric) cells: within each class, each explanation
metric contributes its lowest-scoring samples, on the reading that a low
distance between the raw signal and the network's own feature summary marks
the sample as well-explained and therefore safe to assert. The class with the
fewest correct samples skips the quota and is kept whole so that rare classes
are never starved out of the asserted pool.

All ordering is deterministic: sorts are ascending by (score, id) and the
rationale records the metric plus the 1-based position in that sort, so a
selection can be audited line by line from the written reports.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import ConfigError, SpecError
from .metrics import METRIC_ORDER, MetricTriple, score_batch
from .metrics.peaks import SLACK_SENTINEL
from .signals import Dataset
from .util import round_half_up

if TYPE_CHECKING:
    from .nn.model import Model


@dataclass(frozen=True)
class Budget:
    """How the selection budget decomposes for one batch."""

    requested: int  # budgeted sample count for the whole batch
    budget_pct: float
    incorrect_count: int  # kept unconditionally, paid out of the budget
    quota_classes: int  # classes holding at least one correct sample
    metric_count: int
    per_metric_quota: int  # picks per (class, metric) cell

    def to_dict(self) -> dict:
        return {
            "requested": self.requested,
            "budget_pct": self.budget_pct,
            "incorrect_count": self.incorrect_count,
            "quota_classes": self.quota_classes,
            "metric_count": self.metric_count,
            "per_metric_quota": self.per_metric_quota,
        }


@dataclass(frozen=True)
class Partition:
    """Correct/incorrect split of a batch under a fixed model."""

    predictions: Mapping[str, int]
    correct_by_class: Mapping[int, tuple[str, ...]]  # batch order within class
    incorrect_ids: tuple[str, ...]

    @property
    def correct_count(self) -> int:
        return sum(len(v) for v in self.correct_by_class.values())

    def smallest_correct_class(self) -> int | None:
        """Class with the fewest (but at least one) correct samples; ties go
        to the lowest class index."""
        candidates = [(len(ids), cls) for cls, ids in self.correct_by_class.items() if ids]
        if not candidates:
            return None
        return min(candidates)[1]


def partition_by_classification(model: "Model", batch: Dataset) -> Partition:
    from .nn.model import predict

    if batch.class_count != model.spec.class_count:
        raise SpecError(
            f"batch class_count {batch.class_count} != model class_count "
            f"{model.spec.class_count}"
        )
    preds = predict(model, batch.stacked())
    predictions: dict[str, int] = {}
    correct: dict[int, list[str]] = {}
    incorrect: list[str] = []
    for sig, pred in zip(batch, preds):
        predictions[sig.id] = int(pred)
        if int(pred) == sig.label.index:
            correct.setdefault(sig.label.index, []).append(sig.id)
        else:
            incorrect.append(sig.id)
    return Partition(
        predictions=predictions,
        correct_by_class={c: tuple(ids) for c, ids in correct.items()},
        incorrect_ids=tuple(incorrect),
    )


@dataclass(frozen=True)
class SelectionConfig:
    budget_pct: float = 0.5
    metrics: tuple[str, ...] = METRIC_ORDER
    layer: int | None = None
    scales: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.budget_pct <= 1.0):
            raise ConfigError(f"budget_pct must be in (0, 1], got {self.budget_pct}")
        unknown = [m for m in self.metrics if m not in METRIC_ORDER]
        if unknown:
            raise ConfigError(f"unknown metrics {unknown}; choose from {list(METRIC_ORDER)}")
        canonical = tuple(m for m in METRIC_ORDER if m in set(self.metrics))
        if not canonical:
            raise ConfigError("at least one metric is required")
        object.__setattr__(self, "metrics", canonical)


@dataclass(frozen=True, eq=False)
class CoreSet:
    """Selected portion of a batch plus the audit trail of why."""

    selected: Dataset
    rationale: Mapping[str, str]  # id -> why it was kept
    rejected_ids: tuple[str, ...]
    budget: Budget | None = None

    @property
    def selected_ids(self) -> tuple[str, ...]:
        return self.selected.ids()

    def __len__(self) -> int:
        return len(self.selected)


def per_class_quota(
    requested: int, incorrect_count: int, quota_classes: int, metric_count: int = 3
) -> int:
    """Picks per (class, metric) cell: the budget left after the mandatory
    incorrect samples, split across every cell, floored and clamped at 0."""
    if quota_classes <= 0 or metric_count <= 0:
        return 0
    return max(0, math.floor((requested - incorrect_count) / (metric_count * quota_classes)))


def select_from_scores(
    batch: Dataset,
    partition: Partition,
    scores: Mapping[str, MetricTriple],
    config: SelectionConfig,
) -> CoreSet:
    """Deterministic selection given a fixed partition and score table."""
    missing = [sid for sid in batch.ids() if sid not in scores]
    if missing:
        raise SpecError(f"no scores for ids {missing[:5]}{'...' if len(missing) > 5 else ''}")

    requested = round_half_up(config.budget_pct * len(batch))
    m = len(partition.incorrect_ids)
    quota_classes = sorted(c for c, ids in partition.correct_by_class.items() if ids)
    x = per_class_quota(requested, m, len(quota_classes), len(config.metrics))
    budget = Budget(
        requested=requested,
        budget_pct=config.budget_pct,
        incorrect_count=m,
        quota_classes=len(quota_classes),
        metric_count=len(config.metrics),
        per_metric_quota=x,
    )

    rationale: dict[str, str] = {}
    for sid in partition.incorrect_ids:
        rationale[sid] = "incorrect"

    smallest = partition.smallest_correct_class()
    for cls in quota_classes:
        if cls == smallest:
            continue
        members = partition.correct_by_class[cls]
        for metric in config.metrics:
            ranked = sorted(members, key=lambda sid: (scores[sid].value(metric), sid))
            taken = 0
            for pos, sid in enumerate(ranked, start=1):
                if taken >= x:
                    break
                if sid in rationale:
                    continue
                rationale[sid] = f"{metric}_rank({pos})"
                taken += 1
    if smallest is not None:
        for sid in partition.correct_by_class[smallest]:
            rationale[sid] = "smallest_class_full"

    selected = batch.subset([sid for sid in batch.ids() if sid in rationale])
    rejected = tuple(sid for sid in batch.ids() if sid not in rationale)
    return CoreSet(selected=selected, rationale=rationale, rejected_ids=rejected, budget=budget)


def select_core_set_scored(
    model: "Model", batch: Dataset, config: SelectionConfig
) -> tuple[CoreSet, Mapping[str, MetricTriple], Partition]:
    """Selection plus the score table and partition it was derived from, so
    callers sweeping budgets or metric subsets can reuse one scoring pass."""
    partition = partition_by_classification(model, batch)
    scores = score_batch(model, batch, layer=config.layer, scales=config.scales)
    coreset = select_from_scores(batch, partition, scores, config)
    return coreset, scores, partition


def select_core_set(model: "Model", batch: Dataset, config: SelectionConfig) -> CoreSet:
    """Score a batch against the model's own feature summaries and keep the
    budgeted portion most worth asserting."""
    coreset, _, _ = select_core_set_scored(model, batch, config)
    return coreset


def random_baseline(batch: Dataset, budget_pct: float, seed: int) -> CoreSet:
    """Class-stratified random selection of the same budgeted size, used as
    the control arm in comparisons."""
    if not (0.0 < budget_pct <= 1.0):
        raise ConfigError(f"budget_pct must be in (0, 1], got {budget_pct}")
    requested = round_half_up(budget_pct * len(batch))
    by_class = batch.by_class()
    classes = sorted(by_class)
    n = len(batch)
    # largest-remainder apportionment of the budget across classes
    shares = {c: requested * len(by_class[c]) / n for c in classes}
    counts = {c: math.floor(shares[c]) for c in classes}
    leftovers = sorted(
        classes, key=lambda c: (-(shares[c] - counts[c]), c)
    )
    short = requested - sum(counts.values())
    for c in leftovers[:short]:
        counts[c] += 1
    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for c in classes:
        ids = [s.id for s in by_class[c]]
        take = min(counts[c], len(ids))
        picks = rng.choice(len(ids), size=take, replace=False)
        chosen.update(ids[i] for i in picks)
    rationale = {sid: "random" for sid in batch.ids() if sid in chosen}
    selected = batch.subset([sid for sid in batch.ids() if sid in chosen])
    rejected = tuple(sid for sid in batch.ids() if sid not in chosen)
    return CoreSet(selected=selected, rationale=rationale, rejected_ids=rejected, budget=None)


# ---------------------------------------------------------------------------
# report files


def write_coreset_jsonl(
    path: str | Path,
    batch: Dataset,
    coreset: CoreSet,
    scores: Mapping[str, MetricTriple],
) -> Path:
    """One JSON line per batch sample, in batch order: id, class, the
    selected flag with its rationale, and all three scores. Slack values that
    hit the no-reference sentinel carry an explicit marker."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for sig in batch:
            triple = scores[sig.id]
            row: dict = {
                "id": sig.id,
                "class": sig.label.index,
                "selected": sig.id in coreset.rationale,
                "rationale": coreset.rationale.get(sig.id),
                "dtw": triple.dtw,
                "mse": triple.mse,
                "slack": triple.slack,
            }
            if triple.slack == SLACK_SENTINEL:
                row["slack_sentinel"] = True
            fh.write(json.dumps(row) + "\n")
    return path


def write_metrics_csv(
    path: str | Path,
    batch: Dataset,
    partition: Partition,
    scores: Mapping[str, MetricTriple],
) -> Path:
    """Flat score table, one row per batch sample in batch order. Floats are
    written with repr so rereads round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "correct", "dtw", "mse", "slack"])
        for sig in batch:
            triple = scores[sig.id]
            correct = int(partition.predictions[sig.id] == sig.label.index)
            writer.writerow(
                [sig.id, sig.label.index, correct,
                 repr(triple.dtw), repr(triple.mse), repr(triple.slack)]
            )
    return path
