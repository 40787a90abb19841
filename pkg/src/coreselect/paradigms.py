"""Experiment paradigms p1..p6: multi-seed studies of the selection loop.

Each paradigm builds its own data and baseline model per seed (seeds are
derived from one experiment seed, so whole studies are reproducible), runs
the arms it compares, and returns a report dict that is also written to
`p<N>_report.json` when an output directory is given. Scoring passes are
shared across arms that only differ in budget or metric subset.

p1  rejection rates on a partially corrupted batch, plus fine-tuning on the
    selected subset versus the full batch
p2  fine-tuning on the budgeted core set versus the whole (clean) batch and
    versus a stratified random subset of the same size
p3  stream of [clean batch, fully corrupted batch]: the rollback policy must
    discard the poisoned update and carry the earlier weights forward
p4  budget sweep with one scoring pass per seed
p5  metric ablations (each two-metric subset) against the full triple
p6  p2 rerun on the alternative architecture
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError
from .metrics import METRIC_ORDER, score_batch
from .nn.arch import ArchitectureSpec, architecture_a, architecture_b, compact_architecture
from .nn.evaluation import evaluate
from .nn.model import Model, build_model
from .nn.training import TrainingConfig, fine_tune, train
from .pipeline import PipelineConfig, RollbackPolicy, run_stream
from .selection import (
    SelectionConfig,
    partition_by_classification,
    random_baseline,
    select_from_scores,
)
from .signals import Dataset, DatasetRole, split_dataset
from .synth import CorruptionKind, SynthConfig, corrupt_samples, corrupted_ids, generate_synthetic
from .util import derive_seed

PARADIGM_NAMES = ("p1", "p2", "p3", "p4", "p5", "p6")


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a paradigm needs: data shape, model, budgets, seeds."""

    seed: int = 0
    n_seeds: int = 5
    n_per_class: int = 163
    incoming_per_class: int = 50
    split_ratio: float = 0.7
    corruption_fraction: float = 0.1
    corruption_kinds: tuple[str, ...] = (
        CorruptionKind.ADDITIVE_NOISE.value,
        CorruptionKind.FLATLINE_SEGMENT.value,
    )
    synth: SynthConfig = field(default_factory=SynthConfig)
    architecture: str = "compact"
    # desk-scale regime: few epochs at a hot lr reach ~0.99 test accuracy in
    # seconds; the fine-tune budget is large enough that both the core-set and
    # the full batch converge, so subset-vs-full comparisons measure data
    # quality rather than step-count differences
    training: TrainingConfig = field(
        default_factory=lambda: TrainingConfig(epochs=8, learning_rate=3e-3)
    )
    fine_tuning: TrainingConfig = field(
        default_factory=lambda: TrainingConfig(epochs=40, learning_rate=3e-3)
    )
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    budget_grid: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)

    def __post_init__(self) -> None:
        if self.n_seeds < 1:
            raise ConfigError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.n_per_class < 2:
            raise ConfigError(f"n_per_class must be >= 2, got {self.n_per_class}")
        if self.incoming_per_class < 1:
            raise ConfigError(f"incoming_per_class must be >= 1, got {self.incoming_per_class}")
        if self.architecture not in ("a", "b", "compact"):
            raise ConfigError(f"architecture must be a, b, or compact, got {self.architecture!r}")
        if not self.budget_grid:
            raise ConfigError("budget_grid must be non-empty")
        for b in self.budget_grid:
            if not (0.0 < b <= 1.0):
                raise ConfigError(f"budget_grid values must be in (0, 1], got {b}")
        for k in self.corruption_kinds:
            CorruptionKind(k)  # raises ValueError on unknown kinds


def _architecture(plan: ExperimentPlan) -> ArchitectureSpec:
    length = plan.synth.window_len
    classes = len(plan.synth.classes)
    if plan.architecture == "a":
        return architecture_a(length, classes)
    if plan.architecture == "b":
        return architecture_b(length, classes)
    return compact_architecture(length, classes)


@dataclass(frozen=True, eq=False)
class SeedContext:
    run_seed: int
    train_set: Dataset
    test_set: Dataset
    model: Model


def _prepare(plan: ExperimentPlan, index: int) -> SeedContext:
    """Data and baseline model for one seeded repetition."""
    run_seed = derive_seed(plan.seed, "paradigm", index)
    pool = generate_synthetic(
        replace(plan.synth, seed=derive_seed(run_seed, "generate")), plan.n_per_class
    )
    train_set, test_set = split_dataset(pool, plan.split_ratio, derive_seed(run_seed, "split"))
    model = train(
        build_model(_architecture(plan), derive_seed(run_seed, "init")),
        train_set,
        replace(plan.training, seed=derive_seed(run_seed, "train")),
    )
    return SeedContext(run_seed, train_set, test_set, model)


def _incoming(
    plan: ExperimentPlan, run_seed: int, index: int = 0, fraction: float | None = None
) -> Dataset:
    batch = generate_synthetic(
        replace(plan.synth, seed=derive_seed(run_seed, "batch", index)),
        plan.incoming_per_class,
        role=DatasetRole.INCOMING_BATCH,
    )
    f = plan.corruption_fraction if fraction is None else fraction
    if f > 0.0:
        batch = corrupt_samples(
            batch, f, plan.corruption_kinds, derive_seed(run_seed, "corrupt", index)
        )
    return batch


def _median(values: Sequence[float | None]) -> float | None:
    kept = [v for v in values if v is not None]
    if not kept:
        return None
    return float(np.median(kept))


def _rate(hits: int, total: int) -> float | None:
    return None if total == 0 else hits / total


# ---------------------------------------------------------------------------
# p1: rejection rates + subset-vs-full fine-tune on a corrupted batch


def _run_p1(plan: ExperimentPlan) -> dict:
    runs = []
    for i in range(plan.n_seeds):
        ctx = _prepare(plan, i)
        batch = _incoming(plan, ctx.run_seed)
        partition = partition_by_classification(ctx.model, batch)
        scores = score_batch(ctx.model, batch, layer=plan.selection.layer, scales=plan.selection.scales)
        coreset = select_from_scores(batch, partition, scores, plan.selection)

        rejected = set(coreset.rejected_ids)
        corrupted = set(corrupted_ids(batch))
        correct = {sid for ids in partition.correct_by_class.values() for sid in ids}
        corrupted_correct = corrupted & correct
        clean_correct = correct - corrupted

        tune_cfg = replace(plan.fine_tuning, seed=derive_seed(ctx.run_seed, "fine_tune"))
        acc_base = evaluate(ctx.model, ctx.test_set).accuracy
        acc_subset = evaluate(
            fine_tune(ctx.model, coreset.selected, tune_cfg), ctx.test_set
        ).accuracy
        acc_full = evaluate(fine_tune(ctx.model, batch, tune_cfg), ctx.test_set).accuracy

        runs.append(
            {
                "seed_index": i,
                "run_seed": ctx.run_seed,
                "batch_size": len(batch),
                "coreset_size": len(coreset),
                "corrupted_count": len(corrupted),
                "rejection_rate_corrupted_correct": _rate(
                    len(corrupted_correct & rejected), len(corrupted_correct)
                ),
                "rejection_rate_clean_correct": _rate(
                    len(clean_correct & rejected), len(clean_correct)
                ),
                "accuracy_baseline": acc_base,
                "accuracy_coreset_tuned": acc_subset,
                "accuracy_full_batch_tuned": acc_full,
            }
        )
    summary = {
        "median_rejection_rate_corrupted_correct": _median(
            [r["rejection_rate_corrupted_correct"] for r in runs]
        ),
        "median_rejection_rate_clean_correct": _median(
            [r["rejection_rate_clean_correct"] for r in runs]
        ),
        "median_accuracy_baseline": _median([r["accuracy_baseline"] for r in runs]),
        "median_accuracy_coreset_tuned": _median([r["accuracy_coreset_tuned"] for r in runs]),
        "median_accuracy_full_batch_tuned": _median(
            [r["accuracy_full_batch_tuned"] for r in runs]
        ),
    }
    return {"paradigm": "p1", "runs": runs, "summary": summary}


# ---------------------------------------------------------------------------
# p2 (and p6): core set vs full batch vs random subset on a clean batch


def _run_p2(plan: ExperimentPlan, name: str = "p2") -> dict:
    runs = []
    for i in range(plan.n_seeds):
        ctx = _prepare(plan, i)
        batch = _incoming(plan, ctx.run_seed, fraction=0.0)
        partition = partition_by_classification(ctx.model, batch)
        scores = score_batch(ctx.model, batch, layer=plan.selection.layer, scales=plan.selection.scales)
        coreset = select_from_scores(batch, partition, scores, plan.selection)
        random_set = random_baseline(
            batch, plan.selection.budget_pct, derive_seed(ctx.run_seed, "baseline")
        )

        tune_cfg = replace(plan.fine_tuning, seed=derive_seed(ctx.run_seed, "fine_tune"))
        acc_base = evaluate(ctx.model, ctx.test_set).accuracy
        acc_core = evaluate(fine_tune(ctx.model, coreset.selected, tune_cfg), ctx.test_set).accuracy
        acc_full = evaluate(fine_tune(ctx.model, batch, tune_cfg), ctx.test_set).accuracy
        acc_rand = evaluate(
            fine_tune(ctx.model, random_set.selected, tune_cfg), ctx.test_set
        ).accuracy

        runs.append(
            {
                "seed_index": i,
                "run_seed": ctx.run_seed,
                "batch_size": len(batch),
                "coreset_size": len(coreset),
                "random_size": len(random_set),
                "accuracy_baseline": acc_base,
                "accuracy_coreset_tuned": acc_core,
                "accuracy_full_batch_tuned": acc_full,
                "accuracy_random_tuned": acc_rand,
            }
        )
    summary = {
        "budget_pct": plan.selection.budget_pct,
        "median_accuracy_baseline": _median([r["accuracy_baseline"] for r in runs]),
        "median_accuracy_coreset_tuned": _median([r["accuracy_coreset_tuned"] for r in runs]),
        "median_accuracy_full_batch_tuned": _median(
            [r["accuracy_full_batch_tuned"] for r in runs]
        ),
        "median_accuracy_random_tuned": _median([r["accuracy_random_tuned"] for r in runs]),
    }
    return {"paradigm": name, "architecture": plan.architecture, "runs": runs, "summary": summary}


# ---------------------------------------------------------------------------
# p3: poisoned-stream rollback


def _model_params_equal(a: Model, b: Model) -> bool:
    for pa, pb in zip(a.params, b.params):
        if (pa is None) != (pb is None):
            return False
        if pa is None:
            continue
        if not (np.array_equal(pa.weight, pb.weight) and np.array_equal(pa.bias, pb.bias)):
            return False
    return True


def _run_p3(plan: ExperimentPlan, out_dir: Path | None) -> dict:
    runs = []
    for i in range(plan.n_seeds):
        ctx = _prepare(plan, i)
        clean = _incoming(plan, ctx.run_seed, index=0, fraction=0.0)
        poisoned = _incoming(plan, ctx.run_seed, index=1, fraction=1.0)
        pipe = PipelineConfig(
            selection=plan.selection,
            fine_tuning=replace(plan.fine_tuning, seed=derive_seed(ctx.run_seed, "fine_tune")),
            rollback=RollbackPolicy.REJECT_ON_ACCURACY_DROP,
        )
        stream_dir = None if out_dir is None else out_dir / f"p3_seed_{i}"
        final, records = run_stream(ctx.model, [clean, poisoned], ctx.test_set, pipe, stream_dir)

        # replay the clean prefix to check the poisoned batch left no trace
        prefix_model, _ = run_stream(ctx.model, [clean], ctx.test_set, pipe)
        runs.append(
            {
                "seed_index": i,
                "run_seed": ctx.run_seed,
                "accepted": [r.accepted for r in records],
                "accuracy_before_poison": records[-1].before.accuracy,
                "accuracy_if_poison_accepted": records[-1].after.accuracy,
                "poison_rejected": not records[-1].accepted,
                "final_matches_clean_prefix": _model_params_equal(final, prefix_model),
            }
        )
    summary = {
        "all_poison_rejected": all(r["poison_rejected"] for r in runs),
        "all_rollbacks_exact": all(r["final_matches_clean_prefix"] for r in runs),
        "median_accuracy_before_poison": _median([r["accuracy_before_poison"] for r in runs]),
        "median_accuracy_if_poison_accepted": _median(
            [r["accuracy_if_poison_accepted"] for r in runs]
        ),
    }
    return {"paradigm": "p3", "runs": runs, "summary": summary}


# ---------------------------------------------------------------------------
# p4: budget sweep, one scoring pass per seed


def _run_p4(plan: ExperimentPlan, out_dir: Path | None) -> dict:
    rows = []
    for i in range(plan.n_seeds):
        ctx = _prepare(plan, i)
        batch = _incoming(plan, ctx.run_seed)
        partition = partition_by_classification(ctx.model, batch)
        scores = score_batch(ctx.model, batch, layer=plan.selection.layer, scales=plan.selection.scales)
        tune_cfg = replace(plan.fine_tuning, seed=derive_seed(ctx.run_seed, "fine_tune"))
        for budget in plan.budget_grid:
            config = replace(plan.selection, budget_pct=budget)
            coreset = select_from_scores(batch, partition, scores, config)
            if len(coreset) == 0:
                acc = evaluate(ctx.model, ctx.test_set).accuracy
            else:
                acc = evaluate(
                    fine_tune(ctx.model, coreset.selected, tune_cfg), ctx.test_set
                ).accuracy
            rows.append(
                {
                    "seed_index": i,
                    "run_seed": ctx.run_seed,
                    "budget_pct": budget,
                    "coreset_size": len(coreset),
                    "accuracy": acc,
                }
            )
    medians = {
        str(budget): _median([r["accuracy"] for r in rows if r["budget_pct"] == budget])
        for budget in plan.budget_grid
    }
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "p4_curve.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["budget_pct", "seed_index", "coreset_size", "accuracy"])
            for r in rows:
                writer.writerow(
                    [repr(r["budget_pct"]), r["seed_index"], r["coreset_size"], repr(r["accuracy"])]
                )
    return {
        "paradigm": "p4",
        "budget_grid": list(plan.budget_grid),
        "runs": rows,
        "summary": {"median_accuracy_by_budget": medians},
    }


# ---------------------------------------------------------------------------
# p5: metric ablations, scores shared across subsets


def _run_p5(plan: ExperimentPlan) -> dict:
    subsets = [METRIC_ORDER] + [
        tuple(m for m in METRIC_ORDER if m != dropped) for dropped in METRIC_ORDER
    ]
    per_subset: dict[str, list[float]] = {"+".join(s): [] for s in subsets}
    coreset_sizes: dict[str, list[int]] = {"+".join(s): [] for s in subsets}
    runs = []
    for i in range(plan.n_seeds):
        ctx = _prepare(plan, i)
        batch = _incoming(plan, ctx.run_seed)
        partition = partition_by_classification(ctx.model, batch)
        scores = score_batch(ctx.model, batch, layer=plan.selection.layer, scales=plan.selection.scales)
        tune_cfg = replace(plan.fine_tuning, seed=derive_seed(ctx.run_seed, "fine_tune"))
        for subset in subsets:
            key = "+".join(subset)
            config = replace(plan.selection, metrics=subset)
            coreset = select_from_scores(batch, partition, scores, config)
            acc = evaluate(
                fine_tune(ctx.model, coreset.selected, tune_cfg), ctx.test_set
            ).accuracy
            per_subset[key].append(acc)
            coreset_sizes[key].append(len(coreset))
            runs.append(
                {
                    "seed_index": i,
                    "run_seed": ctx.run_seed,
                    "metrics": list(subset),
                    "coreset_size": len(coreset),
                    "accuracy": acc,
                }
            )
    summary = {
        "median_accuracy_by_metric_set": {
            key: _median(vals) for key, vals in per_subset.items()
        }
    }
    return {"paradigm": "p5", "runs": runs, "summary": summary}


# ---------------------------------------------------------------------------
# dispatch


def run_paradigm(
    name: str, plan: ExperimentPlan, out_dir: str | Path | None = None
) -> dict:
    """Run one paradigm and, when out_dir is given, write p<N>_report.json
    (plus any paradigm-specific data files) into it."""
    name = name.lower()
    if name not in PARADIGM_NAMES:
        raise ConfigError(f"unknown paradigm {name!r}; choose from {list(PARADIGM_NAMES)}")
    out = Path(out_dir) if out_dir is not None else None

    runner: Callable[[], dict]
    if name == "p1":
        runner = lambda: _run_p1(plan)
    elif name == "p2":
        runner = lambda: _run_p2(plan)
    elif name == "p3":
        runner = lambda: _run_p3(plan, out)
    elif name == "p4":
        runner = lambda: _run_p4(plan, out)
    elif name == "p5":
        runner = lambda: _run_p5(plan)
    else:  # p6
        runner = lambda: _run_p2(replace(plan, architecture="b"), name="p6")
    report = runner()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{name}_report.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
