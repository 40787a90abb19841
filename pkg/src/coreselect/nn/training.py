"""Mean cross-entropy loss, analytic gradients, and Adam training loops.

`train` is pure: it returns a new model and never mutates its input, so a
rejected update can fall back to the pre-update model object with no copying
discipline required anywhere else. Fine-tuning is the same loop warm-started
from existing parameters; only the caller's choice of config differs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigError, DivergenceError, EmptyBatchError, SpecError
from ..signals import Dataset
from ..util import derive_seed
from .arch import ArchitectureSpec
from .model import (
    LayerParams,
    Model,
    _backward_arrays,
    _forward_arrays,
    _stack_input,
    attach_params,
    build_model,
    detach_params,
)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    seed: int = 0
    k_folds: int | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        # learning_rate 0.0 is allowed so tests can freeze a model in place
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.k_folds is not None and self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")


def _check_compat(model: Model, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if len(ds) == 0:
        raise EmptyBatchError("cannot compute loss on an empty dataset")
    if ds.class_count != model.spec.class_count:
        raise SpecError(
            f"dataset class_count {ds.class_count} != model class_count "
            f"{model.spec.class_count}"
        )
    x = _stack_input(model.spec, ds.stacked())
    return x, ds.labels()


def cross_entropy_loss(model: Model, ds: Dataset) -> float:
    """Mean negative log-likelihood of the true labels."""
    x, y = _check_compat(model, ds)
    arrays = [None if lp is None else (lp.weight, lp.bias) for lp in model.params]
    _, log_probs, _, _ = _forward_arrays(model.spec, arrays, x)
    return float(-log_probs[np.arange(len(y)), y].mean())


def gradient_of_loss(model: Model, ds: Dataset) -> list[LayerParams | None]:
    """Analytic gradient of `cross_entropy_loss` for every parameter array,
    aligned with `model.params` (None for parameterless layers)."""
    x, y = _check_compat(model, ds)
    arrays = [None if lp is None else (lp.weight, lp.bias) for lp in model.params]
    probs, _, caches, _ = _forward_arrays(model.spec, arrays, x, need_cache=True)
    raw = _backward_arrays(model.spec, arrays, caches, probs, y)
    out: list[LayerParams | None] = []
    for g in raw:
        out.append(None if g is None else LayerParams(g[0], g[1]))
    return out


def train(model: Model, ds: Dataset, config: TrainingConfig) -> Model:
    """Adam minibatch training. Returns a new model whose loss_history holds
    one sample-weighted mean loss per epoch; the input model is untouched.
    Raises DivergenceError as soon as any loss or parameter goes non-finite."""
    x, y = _check_compat(model, ds)
    n = x.shape[0]
    arrays = detach_params(model)
    adam_m = [None if a is None else [np.zeros_like(a[0]), np.zeros_like(a[1])] for a in arrays]
    adam_v = [None if a is None else [np.zeros_like(a[0]), np.zeros_like(a[1])] for a in arrays]
    step = 0
    lr, b1, b2, eps = config.learning_rate, config.beta1, config.beta2, config.epsilon

    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            take = order[start : start + config.batch_size]
            xb, yb = x[take], y[take]
            probs, log_probs, caches, _ = _forward_arrays(
                model.spec, arrays, xb, need_cache=True
            )
            batch_loss = float(-log_probs[np.arange(len(yb)), yb].mean())
            if not np.isfinite(batch_loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}"
                )
            epoch_loss += batch_loss * len(yb)
            grads = _backward_arrays(model.spec, arrays, caches, probs, yb)
            step += 1
            bc1 = 1.0 - b1**step
            bc2 = 1.0 - b2**step
            for li, g in enumerate(grads):
                if g is None:
                    continue
                for k in range(2):
                    m = adam_m[li][k]
                    v = adam_v[li][k]
                    m *= b1
                    m += (1.0 - b1) * g[k]
                    v *= b2
                    v += (1.0 - b2) * g[k] * g[k]
                    update = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
                    arrays[li][k] -= update
                    if not np.all(np.isfinite(arrays[li][k])):
                        raise DivergenceError(
                            f"non-finite parameter in layer {li} at epoch {epoch}"
                        )
        history.append(epoch_loss / n)

    trained = attach_params(model, arrays)
    return replace(trained, loss_history=tuple(history))


def fine_tune(model: Model, ds: Dataset, config: TrainingConfig) -> Model:
    """Continue training an existing model on new data (same update rule,
    fresh optimizer state)."""
    return train(model, ds, config)


def _stratified_folds(ds: Dataset, k: int, seed: int) -> list[np.ndarray]:
    """Index folds with each class spread as evenly as counts allow."""
    rng = np.random.default_rng(seed)
    labels = ds.labels()
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in range(ds.class_count):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ConfigError(
                f"class {cls} has {len(members)} samples, fewer than k={k}"
            )
        members = members[rng.permutation(len(members))]
        for pos, idx in enumerate(members):
            folds[pos % k].append(int(idx))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def cross_validate(
    spec: ArchitectureSpec, ds: Dataset, config: TrainingConfig
) -> tuple[float, ...]:
    """k-fold validation accuracy for an architecture/config pair. Each fold
    trains a fresh model on the remaining folds and scores the held-out one."""
    from .evaluation import evaluate

    if config.k_folds is None:
        raise ConfigError("config.k_folds must be set for cross_validate")
    k = config.k_folds
    folds = _stratified_folds(ds, k, derive_seed(config.seed, "split"))
    ids = ds.ids()
    accs: list[float] = []
    for fold in range(k):
        held = set(folds[fold].tolist())
        train_ids = [ids[i] for i in range(len(ds)) if i not in held]
        test_ids = [ids[i] for i in sorted(held)]
        model = build_model(spec, derive_seed(config.seed, "init", fold))
        fitted = train(model, ds.subset(train_ids), config)
        report = evaluate(fitted, ds.subset(test_ids))
        accs.append(report.accuracy)
    return tuple(accs)
