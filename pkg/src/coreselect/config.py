"""Declarative run configuration.

A run is described by one JSON document; every key has a default, so `{}` is
a complete config. Unknown keys are rejected with their dotted path, wrong
value types likewise, and the fully resolved tree (defaults merged in) can be
written next to a run's outputs so it reproduces from the file alone.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, IoError
from .nn import ArchitectureSpec, TrainingConfig, architecture_a, architecture_b, compact_architecture
from .paradigms import ExperimentPlan
from .pipeline import PipelineConfig, RollbackPolicy
from .selection import SelectionConfig
from .synth import CorruptionKind, SynthConfig
from .util import derive_seed

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "architecture": "compact",
    "synth": {
        "window_len": 256,
        "sampling_rate": 50.0,
        "beats_per_window": 5,
        "noise_amplitude": 0.05,
    },
    "training": {
        "epochs": 8,
        "learning_rate": 3e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "batch_size": 32,
        "k_folds": None,
    },
    "fine_tuning": {
        "epochs": 40,
        "learning_rate": 3e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "batch_size": 32,
        "k_folds": None,
    },
    "selection": {
        "budget_pct": 0.5,
        "metrics": ["dtw", "mse", "slack"],
        "layer": None,
    },
    "pipeline": {
        "rollback": "reject_on_accuracy_drop",
    },
    "generate": {
        "n_per_class": 163,
        "split_ratio": 0.7,
        "batches": 1,
        "batch_per_class": 50,
        "corruption_fraction": 0.0,
        "corruption_kinds": ["additive_noise", "flatline_segment"],
    },
    "paradigm": {
        "n_seeds": 5,
        "n_per_class": 163,
        "incoming_per_class": 50,
        "split_ratio": 0.7,
        "corruption_fraction": 0.1,
        "corruption_kinds": ["additive_noise", "flatline_segment"],
        "budget_grid": [0.2, 0.4, 0.6, 0.8, 1.0],
    },
}

# keys whose default is None, with the type a non-null value must have
_NULLABLE: dict[str, type] = {
    "training.k_folds": int,
    "fine_tuning.k_folds": int,
    "selection.layer": int,
}


def _check_scalar(path: str, default: Any, value: Any) -> Any:
    if path in _NULLABLE:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, _NULLABLE[path]):
            raise ConfigError(f"{path}: expected {_NULLABLE[path].__name__} or null, got {value!r}")
        return value
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected {type(default).__name__}, got {value!r}")
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if isinstance(default, int):
        if not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported config value {value!r}")


def _check_list(path: str, default: list, value: Any) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected list, got {value!r}")
    if not value:
        raise ConfigError(f"{path}: must be non-empty")
    element = default[0]
    return [_check_scalar(f"{path}[{i}]", element, v) for i, v in enumerate(value)]


def _merge(defaults: Mapping[str, Any], user: Mapping[str, Any], prefix: str = "") -> dict:
    out: dict[str, Any] = {}
    unknown = sorted(set(user) - set(defaults))
    if unknown:
        listed = ", ".join(f"{prefix}{k}" for k in unknown)
        raise ConfigError(f"unknown config key(s): {listed}")
    for key, default in defaults.items():
        path = f"{prefix}{key}"
        if key not in user:
            out[key] = copy.deepcopy(default)
        elif isinstance(default, dict):
            if not isinstance(user[key], dict):
                raise ConfigError(f"{path}: expected object, got {user[key]!r}")
            out[key] = _merge(default, user[key], prefix=path + ".")
        elif isinstance(default, list):
            out[key] = _check_list(path, default, user[key])
        else:
            out[key] = _check_scalar(path, default, user[key])
    return out


def _validate(tree: dict) -> None:
    """Cross-field checks beyond shape: values the command layer requires."""
    for section in ("training", "fine_tuning"):
        if tree[section]["learning_rate"] <= 0.0:
            raise ConfigError(f"{section}.learning_rate: must be > 0")
    if tree["architecture"] not in ("a", "b", "compact"):
        raise ConfigError(
            f"architecture: must be one of a, b, compact, got {tree['architecture']!r}"
        )
    try:
        RollbackPolicy(tree["pipeline"]["rollback"])
    except ValueError:
        raise ConfigError(
            f"pipeline.rollback: unknown policy {tree['pipeline']['rollback']!r}"
        ) from None
    for section in ("generate", "paradigm"):
        for kind in tree[section]["corruption_kinds"]:
            try:
                CorruptionKind(kind)
            except ValueError:
                raise ConfigError(
                    f"{section}.corruption_kinds: unknown kind {kind!r}"
                ) from None
        if not (0.0 <= tree[section]["corruption_fraction"] <= 1.0):
            raise ConfigError(f"{section}.corruption_fraction: must be in [0, 1]")
        if not (0.0 < tree[section]["split_ratio"] < 1.0):
            raise ConfigError(f"{section}.split_ratio: must be in (0, 1)")
    if tree["generate"]["batches"] < 0:
        raise ConfigError("generate.batches: must be >= 0")
    # range checks for the rest live in the dataclasses they build
    _ = SelectionConfig(
        budget_pct=tree["selection"]["budget_pct"],
        metrics=tuple(tree["selection"]["metrics"]),
        layer=tree["selection"]["layer"],
    )


@dataclass(frozen=True)
class RunConfig:
    """A validated, fully resolved config tree."""

    tree: Mapping[str, Any]

    @classmethod
    def from_dict(cls, user: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(user, Mapping):
            raise ConfigError(f"config root: expected object, got {user!r}")
        tree = _merge(DEFAULTS, user)
        _validate(tree)
        return cls(tree)

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        """Read a JSON config file; None means all defaults."""
        if path is None:
            return cls.from_dict({})
        path = Path(path)
        if not path.is_file():
            raise IoError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: config root must be a JSON object")
        return cls.from_dict(user)

    def with_overrides(
        self,
        seed: int | None = None,
        budget: float | None = None,
        layer: int | None = None,
        metrics: str | None = None,
    ) -> "RunConfig":
        """Apply CLI flag overrides and re-validate."""
        tree = copy.deepcopy(dict(self.tree))
        if seed is not None:
            tree["seed"] = seed
        if budget is not None:
            tree["selection"]["budget_pct"] = budget
        if layer is not None:
            tree["selection"]["layer"] = layer
        if metrics is not None:
            parsed = [m.strip() for m in metrics.split(",") if m.strip()]
            if not parsed:
                raise ConfigError(f"--metrics: no metric names in {metrics!r}")
            tree["selection"]["metrics"] = parsed
        return RunConfig.from_dict(tree)

    # ---- views -----------------------------------------------------------

    @property
    def seed(self) -> int:
        return self.tree["seed"]

    def resolved(self) -> dict:
        return copy.deepcopy(dict(self.tree))

    def synth_config(self, seed: int) -> SynthConfig:
        s = self.tree["synth"]
        return SynthConfig(
            sampling_rate=s["sampling_rate"],
            window_len=s["window_len"],
            beats_per_window=s["beats_per_window"],
            noise_amplitude=s["noise_amplitude"],
            seed=seed,
        )

    def _training(self, section: str, seed: int) -> TrainingConfig:
        t = self.tree[section]
        return TrainingConfig(
            epochs=t["epochs"],
            learning_rate=t["learning_rate"],
            beta1=t["beta1"],
            beta2=t["beta2"],
            epsilon=t["epsilon"],
            batch_size=t["batch_size"],
            seed=seed,
            k_folds=t["k_folds"],
        )

    def training_config(self, seed: int) -> TrainingConfig:
        return self._training("training", seed)

    def fine_tuning_config(self, seed: int) -> TrainingConfig:
        return self._training("fine_tuning", seed)

    def selection_config(self) -> SelectionConfig:
        s = self.tree["selection"]
        return SelectionConfig(
            budget_pct=s["budget_pct"], metrics=tuple(s["metrics"]), layer=s["layer"]
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            selection=self.selection_config(),
            fine_tuning=self.fine_tuning_config(derive_seed(self.seed, "fine_tune")),
            rollback=RollbackPolicy(self.tree["pipeline"]["rollback"]),
        )

    def architecture_spec(self, window_len: int, class_count: int) -> ArchitectureSpec:
        name = self.tree["architecture"]
        if name == "a":
            return architecture_a(window_len, class_count)
        if name == "b":
            return architecture_b(window_len, class_count)
        return compact_architecture(window_len, class_count)

    def experiment_plan(self) -> ExperimentPlan:
        p = self.tree["paradigm"]
        return ExperimentPlan(
            seed=self.seed,
            n_seeds=p["n_seeds"],
            n_per_class=p["n_per_class"],
            incoming_per_class=p["incoming_per_class"],
            split_ratio=p["split_ratio"],
            corruption_fraction=p["corruption_fraction"],
            corruption_kinds=tuple(p["corruption_kinds"]),
            synth=self.synth_config(0),  # per-run seeds are derived inside
            architecture=self.tree["architecture"],
            training=self.training_config(0),
            fine_tuning=self.fine_tuning_config(0),
            selection=self.selection_config(),
            budget_grid=tuple(p["budget_grid"]),
        )

    def write_resolved(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "resolved_config.json"
        with open(path, "w") as fh:
            json.dump(self.resolved(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
