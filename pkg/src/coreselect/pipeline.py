"""Iterative assert-and-update loop over a stream of incoming batches.

Each iteration selects a core set from the batch, fine-tunes a candidate
model on it, and measures held-out accuracy before and after. Under the
default policy a candidate that scores below the pre-update model is
discarded and the stream continues from the previous weights, so a poisoned
batch cannot degrade the deployed model.

When an output directory is given, every iteration leaves a complete audit
trail (selection report, score table, evaluation report, weight checkpoint)
plus a stream-level summary. File contents are deterministic functions of
the inputs: no timestamps, no environment capture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError
from .metrics import MetricTriple
from .nn.evaluation import EvaluationReport, evaluate
from .nn.model import Model, save_checkpoint
from .nn.training import TrainingConfig, fine_tune
from .selection import (
    CoreSet,
    Partition,
    SelectionConfig,
    select_core_set_scored,
    write_coreset_jsonl,
    write_metrics_csv,
)
from .signals import Dataset


class RollbackPolicy(str, Enum):
    # accept the candidate only if held-out accuracy did not drop
    REJECT_ON_ACCURACY_DROP = "reject_on_accuracy_drop"
    # always keep the candidate (control arms, ablations)
    ALWAYS_ACCEPT = "always_accept"


@dataclass(frozen=True)
class PipelineConfig:
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    fine_tuning: TrainingConfig = field(default_factory=TrainingConfig)
    rollback: RollbackPolicy = RollbackPolicy.REJECT_ON_ACCURACY_DROP


@dataclass(frozen=True)
class IterationRecord:
    """What one assert-and-update iteration did, sufficient to audit it."""

    batch_id: str
    before: EvaluationReport
    after: EvaluationReport  # candidate's score even when rolled back
    coreset_size: int
    budget_pct: float
    accepted: bool
    rejected_sample_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
            "coreset_size": self.coreset_size,
            "budget_pct": self.budget_pct,
            "accepted": self.accepted,
            "rejected_sample_ids": list(self.rejected_sample_ids),
        }


@dataclass(frozen=True, eq=False)
class IterationArtifacts:
    """Inputs/outputs of one iteration kept around for report writing."""

    batch: Dataset
    coreset: CoreSet
    scores: Mapping[str, MetricTriple]
    partition: Partition
    model_after: Model


def _check_disjoint(batch: Dataset, test_set: Dataset) -> None:
    overlap = set(batch.ids()) & set(test_set.ids())
    if overlap:
        raise ConfigError(
            f"incoming batch shares {len(overlap)} ids with the test set "
            f"(e.g. {sorted(overlap)[:3]}); streams must not assert test data"
        )


def run_iteration(
    model: Model,
    batch: Dataset,
    test_set: Dataset,
    config: PipelineConfig,
    *,
    batch_id: str = "batch_0",
) -> tuple[Model, IterationRecord, IterationArtifacts]:
    """One select/fine-tune/compare step. Returns the model to carry forward
    (the candidate if accepted, otherwise the input model unchanged)."""
    _check_disjoint(batch, test_set)
    coreset, scores, partition = select_core_set_scored(model, batch, config.selection)
    before = evaluate(model, test_set)

    if len(coreset) == 0:
        # nothing to assert: a no-op iteration, trivially accepted
        record = IterationRecord(
            batch_id=batch_id,
            before=before,
            after=before,
            coreset_size=0,
            budget_pct=config.selection.budget_pct,
            accepted=True,
            rejected_sample_ids=coreset.rejected_ids,
        )
        return model, record, IterationArtifacts(batch, coreset, scores, partition, model)

    candidate = fine_tune(model, coreset.selected, config.fine_tuning)
    after = evaluate(candidate, test_set)
    if config.rollback is RollbackPolicy.REJECT_ON_ACCURACY_DROP:
        accepted = after.accuracy >= before.accuracy
    else:
        accepted = True
    kept = candidate if accepted else model
    record = IterationRecord(
        batch_id=batch_id,
        before=before,
        after=after,
        coreset_size=len(coreset),
        budget_pct=config.selection.budget_pct,
        accepted=accepted,
        rejected_sample_ids=coreset.rejected_ids,
    )
    return kept, record, IterationArtifacts(batch, coreset, scores, partition, kept)


def _write_iteration_dir(
    out_dir: Path, record: IterationRecord, artifacts: IterationArtifacts
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_coreset_jsonl(out_dir / "coreset.jsonl", artifacts.batch, artifacts.coreset, artifacts.scores)
    write_metrics_csv(out_dir / "metrics.csv", artifacts.batch, artifacts.partition, artifacts.scores)
    doc = record.to_dict()
    budget = artifacts.coreset.budget
    doc["budget"] = budget.to_dict() if budget is not None else None
    with open(out_dir / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_checkpoint(artifacts.model_after, out_dir / "checkpoint.json")


def run_stream(
    model: Model,
    batches: Sequence[Dataset],
    test_set: Dataset,
    config: PipelineConfig,
    out_dir: str | Path | None = None,
) -> tuple[Model, tuple[IterationRecord, ...]]:
    """Fold `run_iteration` over a batch sequence. With `out_dir` set, writes
    iteration_<k>/{coreset.jsonl, metrics.csv, report.json, checkpoint.json}
    and a top-level stream.json."""
    out = Path(out_dir) if out_dir is not None else None
    records: list[IterationRecord] = []
    current = model
    for k, batch in enumerate(batches):
        current, record, artifacts = run_iteration(
            current, batch, test_set, config, batch_id=f"batch_{k}"
        )
        records.append(record)
        if out is not None:
            _write_iteration_dir(out / f"iteration_{k}", record, artifacts)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        final_acc = (
            records[-1].after.accuracy if records and records[-1].accepted
            else (records[-1].before.accuracy if records else None)
        )
        doc = {
            "iteration_count": len(records),
            "final_accuracy": final_acc,
            "iterations": [r.to_dict() for r in records],
        }
        with open(out / "stream.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return current, tuple(records)
