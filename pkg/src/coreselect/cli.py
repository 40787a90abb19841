"""Command-line entry point.

Subcommands cover the whole loop: generate synthetic data, train a model,
select a core-set from a batch, run assert-and-update iterations over a batch
stream, evaluate a checkpoint, and run the prebuilt experiment scenarios.

Every command validates its config and input paths before creating the output
directory, writes `resolved_config.json` (defaults and flag overrides merged
in) next to its outputs, and derives all randomness from the single config
seed. Failures print one `ErrorName: message` line and exit nonzero: 2 for
config or usage problems, 1 for everything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, CoreselectError, IoError, ParseError
from .nn import build_model, evaluate, load_checkpoint, save_checkpoint, train
from .paradigms import PARADIGM_NAMES, run_paradigm
from .pipeline import run_stream
from .selection import select_core_set_scored, write_coreset_jsonl, write_metrics_csv
from .signals import DatasetRole, load_dataset, save_dataset, split_dataset
from .synth import corrupt_samples, generate_synthetic
from .util import derive_seed


def _add_common(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file; omit for defaults")
    parser.add_argument("--seed", type=int, metavar="N", help="override config seed")
    parser.add_argument("--out", metavar="DIR", required=out_required, help="output directory")


def _add_selection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget", type=float, metavar="F", help="override selection.budget_pct")
    parser.add_argument("--layer", type=int, metavar="I", help="override selection.layer")
    parser.add_argument(
        "--metrics", metavar="LIST", help="override selection.metrics, e.g. dtw,mse,slack"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreselect",
        description="Core-set selection for 1-D signal classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic train/test sets and incoming batches")
    _add_common(p)

    p = sub.add_parser("train", help="train a model on a dataset file, write a checkpoint")
    _add_common(p)
    p.add_argument("--train", metavar="PATH", required=True, help="training dataset (.jsonl/.csv)")

    p = sub.add_parser("select", help="score a batch against a checkpoint and select a core-set")
    _add_common(p)
    p.add_argument("--checkpoint", metavar="PATH", required=True)
    p.add_argument("--batch", metavar="PATH", required=True, help="incoming batch dataset")
    _add_selection_flags(p)

    p = sub.add_parser("iterate", help="assert-and-update over a stream of batches")
    _add_common(p)
    p.add_argument("--checkpoint", metavar="PATH", required=True)
    p.add_argument("--test", metavar="PATH", required=True, help="held-out test dataset")
    p.add_argument(
        "--batch",
        metavar="PATH",
        action="append",
        required=True,
        help="incoming batch, repeatable in stream order",
    )
    _add_selection_flags(p)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a test dataset")
    _add_common(p)
    p.add_argument("--checkpoint", metavar="PATH", required=True)
    p.add_argument("--test", metavar="PATH", required=True)

    p = sub.add_parser("paradigm", help="run a prebuilt experiment scenario")
    _add_common(p)
    p.add_argument("name", choices=PARADIGM_NAMES, help="which scenario to run")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config)
    return config.with_overrides(
        seed=args.seed,
        budget=getattr(args, "budget", None),
        layer=getattr(args, "layer", None),
        metrics=getattr(args, "metrics", None),
    )


def _require_files(*paths: str) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise IoError(f"input file not found: {p}")


def _prepare_out(config: RunConfig, out: str) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.write_resolved(out_dir)
    return out_dir


def _load(config: RunConfig, path: str, role: DatasetRole, class_count: int | None = None):
    return load_dataset(
        path,
        sampling_rate=config.tree["synth"]["sampling_rate"],
        class_count=class_count,
        role=role,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    seed = config.seed
    gen = config.tree["generate"]
    pool = generate_synthetic(
        config.synth_config(derive_seed(seed, "generate")), gen["n_per_class"]
    )
    train_set, test_set = split_dataset(pool, gen["split_ratio"], derive_seed(seed, "split"))
    batches = []
    for i in range(gen["batches"]):
        batch = generate_synthetic(
            config.synth_config(derive_seed(seed, "batch", i)),
            gen["batch_per_class"],
            role=DatasetRole.INCOMING_BATCH,
        )
        if gen["corruption_fraction"] > 0.0:
            batch = corrupt_samples(
                batch,
                gen["corruption_fraction"],
                tuple(gen["corruption_kinds"]),
                derive_seed(seed, "corrupt", i),
            )
        batches.append(batch)

    out_dir = _prepare_out(config, args.out)
    save_dataset(train_set, out_dir / "train.jsonl")
    save_dataset(test_set, out_dir / "test.jsonl")
    for i, batch in enumerate(batches):
        save_dataset(batch, out_dir / f"batch_{i}.jsonl")
    print(
        f"wrote train ({len(train_set)}), test ({len(test_set)})"
        + "".join(f", batch_{i} ({len(b)})" for i, b in enumerate(batches))
        + f" to {out_dir}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _require_files(args.train)
    train_set = _load(config, args.train, DatasetRole.ASSERTED_POOL)
    spec = config.architecture_spec(train_set.window_len, train_set.class_count)
    model = build_model(spec, derive_seed(config.seed, "init"))
    fitted = train(model, train_set, config.training_config(derive_seed(config.seed, "train")))

    out_dir = _prepare_out(config, args.out)
    save_checkpoint(fitted, out_dir / "checkpoint.json")
    with open(out_dir / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(fitted.loss_history, start=1):
            writer.writerow([epoch, repr(loss)])
    report = evaluate(fitted, train_set)
    print(
        f"trained {config.tree['architecture']} architecture "
        f"({fitted.parameter_count()} parameters) on {len(train_set)} samples, "
        f"train accuracy {report.accuracy:.4f}, checkpoint in {out_dir}"
    )
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _require_files(args.checkpoint, args.batch)
    model = load_checkpoint(args.checkpoint)
    batch = _load(config, args.batch, DatasetRole.INCOMING_BATCH, model.spec.class_count)
    coreset, scores, partition = select_core_set_scored(model, batch, config.selection_config())

    out_dir = _prepare_out(config, args.out)
    write_coreset_jsonl(out_dir / "coreset.jsonl", batch, coreset, scores)
    write_metrics_csv(out_dir / "metrics.csv", batch, partition, scores)
    print(
        f"selected {len(coreset)} of {len(batch)} samples "
        f"(budget {config.selection_config().budget_pct:.0%}), outputs in {out_dir}"
    )
    return 0


def cmd_iterate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _require_files(args.checkpoint, args.test, *args.batch)
    model = load_checkpoint(args.checkpoint)
    test_set = _load(config, args.test, DatasetRole.TEST_SET, model.spec.class_count)
    batches = [
        _load(config, p, DatasetRole.INCOMING_BATCH, model.spec.class_count)
        for p in args.batch
    ]

    out_dir = _prepare_out(config, args.out)
    final, records = run_stream(model, batches, test_set, config.pipeline_config(), out_dir)
    accepted = sum(1 for r in records if r.accepted)
    last = records[-1]
    final_acc = last.after.accuracy if last.accepted else last.before.accuracy
    print(
        f"ran {len(records)} iterations ({accepted} accepted), "
        f"final accuracy {final_acc:.4f}, run dir {out_dir}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _require_files(args.checkpoint, args.test)
    model = load_checkpoint(args.checkpoint)
    test_set = _load(config, args.test, DatasetRole.TEST_SET, model.spec.class_count)
    report = evaluate(model, test_set)

    out_dir = _prepare_out(config, args.out)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"accuracy {report.accuracy:.4f}, macro precision {report.macro_precision:.4f}, "
        f"macro recall {report.macro_recall:.4f}, report in {out_dir}"
    )
    return 0


def cmd_paradigm(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    plan = config.experiment_plan()
    out_dir = _prepare_out(config, args.out)
    report = run_paradigm(args.name, plan, out_dir)
    print(f"{args.name} finished over {plan.n_seeds} seeds, report in {out_dir}")
    for key, value in sorted(report["summary"].items()):
        print(f"  {key}: {value}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "select": cmd_select,
    "iterate": cmd_iterate,
    "evaluate": cmd_evaluate,
    "paradigm": cmd_paradigm,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParseError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CoreselectError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
