"""Model container, parameter init, forward pass, and checkpoint round-trip.

Everything is float64 numpy. The forward pass is written batch-first with an
im2col-style windowed matmul per conv layer; the same code path produces the
caches the backward pass needs, so analytic gradients and inference can never
drift apart. Checkpoints are JSON (floats serialized via repr), which
round-trips IEEE doubles exactly: a loaded model reproduces forward outputs
bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError, SpecError
from .arch import ArchitectureSpec, Conv1d, DenseSoftmax, GlobalAvgPool, MaxPool

_CHECKPOINT_FORMAT = "coreselect-checkpoint"
_CHECKPOINT_VERSION = 1

# inference batches are processed in chunks to bound im2col scratch memory
_INFER_CHUNK = 64


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayerParams:
    """Weight/bias pair for one parametric layer (also used for gradients)."""

    weight: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Post-activation output of one conv layer for a single sample."""

    layer_index: int
    activations: np.ndarray  # (channels, timesteps)

    def __post_init__(self) -> None:
        acts = np.asarray(self.activations, dtype=np.float64)
        object.__setattr__(self, "activations", acts)
        if acts.ndim != 2 or acts.shape[1] < 1:
            raise ShapeError(f"feature map must be (channels, timesteps), got {acts.shape}")
        if not np.all(np.isfinite(acts)):
            raise ValueError("feature map contains non-finite values")


@dataclass(frozen=True, eq=False)
class Model:
    spec: ArchitectureSpec
    params: tuple[LayerParams | None, ...]
    init_seed: int
    loss_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.params) != len(self.spec.layers):
            raise SpecError("params do not align with architecture layers")

    def with_param(self, layer_index: int, name: str, value: np.ndarray) -> "Model":
        """Copy of this model with one parameter array replaced (tests, search)."""
        lp = self.params[layer_index]
        if lp is None:
            raise SpecError(f"layer {layer_index} has no parameters")
        old = getattr(lp, name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != old.shape:
            raise ShapeError(f"shape {value.shape} != {old.shape} for {name}")
        new_lp = LayerParams(
            weight=_frozen(value) if name == "weight" else lp.weight,
            bias=_frozen(value) if name == "bias" else lp.bias,
        )
        params = list(self.params)
        params[layer_index] = new_lp
        return replace(self, params=tuple(params))

    def with_params(self, arrays: Sequence[tuple[np.ndarray, np.ndarray] | None]) -> "Model":
        params: list[LayerParams | None] = []
        for entry in arrays:
            params.append(None if entry is None else LayerParams(_frozen(entry[0]), _frozen(entry[1])))
        return replace(self, params=tuple(params), loss_history=())

    def parameter_count(self) -> int:
        return sum(
            lp.weight.size + lp.bias.size for lp in self.params if lp is not None
        )


def build_model(spec: ArchitectureSpec, seed: int) -> Model:
    """Fresh model with parameters drawn uniform in +/- 1/sqrt(fan_in),
    deterministic in the seed (draw order: layer by layer, weight then bias)."""
    rng = np.random.default_rng(seed)
    params: list[LayerParams | None] = []
    channels = spec.input_channels
    for layer in spec.layers:
        if isinstance(layer, Conv1d):
            fan_in = channels * layer.kernel_size
            bound = 1.0 / math.sqrt(fan_in)
            w = rng.uniform(-bound, bound, (layer.out_channels, channels, layer.kernel_size))
            b = rng.uniform(-bound, bound, layer.out_channels)
            params.append(LayerParams(_frozen(w), _frozen(b)))
            channels = layer.out_channels
        elif isinstance(layer, DenseSoftmax):
            bound = 1.0 / math.sqrt(channels)
            w = rng.uniform(-bound, bound, (layer.units, channels))
            b = rng.uniform(-bound, bound, layer.units)
            params.append(LayerParams(_frozen(w), _frozen(b)))
        else:
            params.append(None)
    return Model(spec, tuple(params), init_seed=seed)


# ---------------------------------------------------------------------------
# forward / backward internals
#
# arrays_per_layer: list of [weight, bias] (or None) detached from the Model
# so the training loop can update in place.


def detach_params(model: Model) -> list[list[np.ndarray] | None]:
    out: list[list[np.ndarray] | None] = []
    for lp in model.params:
        out.append(None if lp is None else [lp.weight.copy(), lp.bias.copy()])
    return out


def attach_params(model: Model, arrays: Sequence[list[np.ndarray] | None]) -> Model:
    return model.with_params(
        [None if a is None else (a[0], a[1]) for a in arrays]
    )


def _softmax_rows(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # non-finite logits are allowed to flow through; the training loop's
    # divergence guard inspects the resulting loss
    with np.errstate(invalid="ignore", over="ignore"):
        z = logits - logits.max(axis=1, keepdims=True)
        ez = np.exp(z)
        denom = ez.sum(axis=1, keepdims=True)
        log_probs = z - np.log(denom)
        return ez / denom, log_probs


def _forward_arrays(
    spec: ArchitectureSpec,
    arrays: Sequence[Sequence[np.ndarray] | None],
    x: np.ndarray,
    *,
    need_cache: bool = False,
    keep_layers: Iterable[int] = (),
):
    """x: (n, input_channels, input_length). Returns (probs, log_probs,
    caches, feature_maps) where feature_maps maps layer index -> (n, c, t)."""
    keep = set(keep_layers)
    caches: list = []
    fmaps: dict[int, np.ndarray] = {}
    a = x
    for li, layer in enumerate(spec.layers):
        if isinstance(layer, Conv1d):
            w, b = arrays[li][0], arrays[li][1]
            windows = sliding_window_view(a, layer.kernel_size, axis=2)
            z = np.tensordot(windows, w, axes=([1, 3], [1, 2]))
            z = np.ascontiguousarray(z.transpose(0, 2, 1)) + b[None, :, None]
            out = np.tanh(z)
            if need_cache:
                caches.append(("conv", a, out))
            if li in keep:
                fmaps[li] = out
            a = out
        elif isinstance(layer, MaxPool):
            n, c, length = a.shape
            t_out = length // layer.window
            trimmed = a[:, :, : t_out * layer.window].reshape(n, c, t_out, layer.window)
            idx = trimmed.argmax(axis=3)
            out = np.take_along_axis(trimmed, idx[..., None], axis=3)[..., 0]
            if need_cache:
                caches.append(("pool", idx, length))
            a = out
        elif isinstance(layer, GlobalAvgPool):
            t_in = a.shape[2]
            out = a.mean(axis=2)
            if need_cache:
                caches.append(("gap", t_in))
            a = out
        else:  # DenseSoftmax
            w, b = arrays[li][0], arrays[li][1]
            logits = a @ w.T + b[None, :]
            probs, log_probs = _softmax_rows(logits)
            if need_cache:
                caches.append(("dense", a))
            return probs, log_probs, caches, fmaps
    raise SpecError("architecture ended without a dense_softmax head")


def _backward_arrays(
    spec: ArchitectureSpec,
    arrays: Sequence[Sequence[np.ndarray] | None],
    caches: list,
    probs: np.ndarray,
    labels: np.ndarray,
) -> list[list[np.ndarray] | None]:
    """Gradients of mean cross-entropy w.r.t. every parameter array."""
    n = probs.shape[0]
    grads: list[list[np.ndarray] | None] = [None] * len(spec.layers)

    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n  # d loss / d logits

    upstream: np.ndarray | None = None
    for li in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[li]
        cache = caches[li]
        if isinstance(layer, DenseSoftmax):
            h = cache[1]
            w = arrays[li][0]
            grads[li] = [delta.T @ h, delta.sum(axis=0)]
            upstream = delta @ w  # (n, channels)
        elif isinstance(layer, GlobalAvgPool):
            t_in = cache[1]
            upstream = np.repeat(upstream[:, :, None], t_in, axis=2) / t_in
        elif isinstance(layer, MaxPool):
            idx, in_len = cache[1], cache[2]
            n_b, c, t_out = upstream.shape
            scattered = np.zeros((n_b, c, t_out, layer.window), dtype=np.float64)
            np.put_along_axis(scattered, idx[..., None], upstream[..., None], axis=3)
            flat = scattered.reshape(n_b, c, t_out * layer.window)
            if flat.shape[2] != in_len:
                pad = np.zeros((n_b, c, in_len - flat.shape[2]), dtype=np.float64)
                flat = np.concatenate([flat, pad], axis=2)
            upstream = flat
        else:  # Conv1d
            x_in, act = cache[1], cache[2]
            w = arrays[li][0]
            dz = upstream * (1.0 - act * act)  # tanh'
            windows = sliding_window_view(x_in, layer.kernel_size, axis=2)
            g_w = np.tensordot(dz, windows, axes=([0, 2], [0, 2]))
            g_b = dz.sum(axis=(0, 2))
            grads[li] = [g_w, g_b]
            t_out = dz.shape[2]
            dx = np.zeros_like(x_in)
            for j in range(layer.kernel_size):
                contrib = np.tensordot(dz, w[:, :, j], axes=([1], [0]))
                dx[:, :, j : j + t_out] += contrib.transpose(0, 2, 1)
            upstream = dx
    return grads


def _stack_input(spec: ArchitectureSpec, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2:
        raise ShapeError(f"expected (n, length) input, got shape {x.shape}")
    if x.shape[1] != spec.input_length:
        raise ShapeError(
            f"input length {x.shape[1]} != architecture input_length "
            f"{spec.input_length}"
        )
    return x[:, None, :].astype(np.float64, copy=False)


# ---------------------------------------------------------------------------
# public forward


def forward_batch(
    model: Model, x: np.ndarray, keep_layers: Iterable[int] = ()
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Probabilities (n, classes) and requested conv activations for a matrix
    of signals (n, input_length). Chunked to bound scratch memory."""
    x = _stack_input(model.spec, np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0:
        raise ShapeError("cannot run the network on an empty batch")
    arrays = [None if lp is None else (lp.weight, lp.bias) for lp in model.params]
    probs_parts: list[np.ndarray] = []
    fmap_parts: dict[int, list[np.ndarray]] = {li: [] for li in keep_layers}
    for start in range(0, x.shape[0], _INFER_CHUNK):
        chunk = x[start : start + _INFER_CHUNK]
        probs, _, _, fmaps = _forward_arrays(
            model.spec, arrays, chunk, keep_layers=keep_layers
        )
        probs_parts.append(probs)
        for li in fmap_parts:
            fmap_parts[li].append(fmaps[li])
    probs = np.concatenate(probs_parts)
    maps = {li: np.concatenate(parts) for li, parts in fmap_parts.items()}
    return probs, maps


def forward(
    model: Model, signal, keep_layers: Iterable[int] | None = None
) -> tuple[np.ndarray, tuple[FeatureMap, ...]]:
    """Single-sample forward: (probabilities, feature maps). By default every
    conv layer's post-activation map is returned."""
    samples = np.asarray(getattr(signal, "samples", signal), dtype=np.float64)
    if samples.ndim != 1:
        raise ShapeError(f"signal must be 1-D, got shape {samples.shape}")
    if keep_layers is None:
        keep_layers = model.spec.conv_layer_indices()
    probs, maps = forward_batch(model, samples[None, :], keep_layers=keep_layers)
    feature_maps = tuple(
        FeatureMap(li, maps[li][0]) for li in sorted(maps)
    )
    return probs[0], feature_maps


def predict(model: Model, x: np.ndarray) -> np.ndarray:
    """Argmax class per row (first index wins ties)."""
    probs, _ = forward_batch(model, x)
    return probs.argmax(axis=1)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: Model, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for lp in model.params:
        if lp is None:
            entries.append(None)
        else:
            entries.append(
                {
                    "weight": {"shape": list(lp.weight.shape),
                               "data": [float(v) for v in lp.weight.reshape(-1)]},
                    "bias": {"shape": list(lp.bias.shape),
                             "data": [float(v) for v in lp.bias.reshape(-1)]},
                }
            )
    doc = {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "seed": model.init_seed,
        "architecture": model.spec.to_dict(),
        "parameters": entries,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    return path


def load_checkpoint(path: str | Path) -> Model:
    with open(Path(path)) as fh:
        doc = json.load(fh)
    if doc.get("format") != _CHECKPOINT_FORMAT:
        raise SpecError(f"{path}: not a model checkpoint")
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise SpecError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    spec = ArchitectureSpec.from_dict(doc["architecture"])
    params: list[tuple[np.ndarray, np.ndarray] | None] = []
    for entry in doc["parameters"]:
        if entry is None:
            params.append(None)
            continue
        w = np.array(entry["weight"]["data"], dtype=np.float64).reshape(entry["weight"]["shape"])
        b = np.array(entry["bias"]["data"], dtype=np.float64).reshape(entry["bias"]["shape"])
        params.append((w, b))
    model = build_model(spec, int(doc["seed"]))
    return model.with_params(params)
