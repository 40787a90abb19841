"""Feature-map summaries and the three per-sample explanation metrics.

A trained model explains a sample through the activations of one of its
convolution layers: channels are averaged into a single curve, linearly
resampled back to the input length, and z-normalized. The sample is then
scored against that curve three ways:

    dtw    warping distance between z-normalized signal and curve
    mse    mean squared difference of their Ricker scalograms
    slack  rhythm deviation between their detected peak trains

Low values mean the model's internal representation already accounts for the
sample; high values mark it as novel or noisy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

import numpy as np

from ..errors import LayerError, ShapeError
from .dtw import dtw_distance
from .peaks import detect_r_peaks, slack_from_intervals
from .wavelet import cwt, default_scales, scalogram_mse

if TYPE_CHECKING:  # only for annotations; nn does not import metrics
    from ..nn.model import Model
    from ..signals import Dataset, Signal

_ZNORM_EPS = 1e-12


def znorm(x) -> np.ndarray:
    """(x - mean) / std with population std; constant input maps to zeros."""
    arr = np.asarray(x, dtype=np.float64)
    sd = float(np.std(arr))
    if sd < _ZNORM_EPS:
        return np.zeros_like(arr)
    return (arr - float(np.mean(arr))) / sd


@dataclass(frozen=True, eq=False)
class FeatureSummary:
    """A z-normalized 1-D curve summarizing one conv layer's activations."""

    curve: np.ndarray
    source_layer: int

    def __post_init__(self) -> None:
        curve = np.asarray(self.curve, dtype=np.float64)
        object.__setattr__(self, "curve", curve)
        if curve.ndim != 1 or curve.size == 0:
            raise ShapeError(f"curve must be non-empty 1-D, got {curve.shape}")
        if not np.all(np.isfinite(curve)):
            raise ValueError("curve contains non-finite values")
        if np.any(curve != 0.0):
            if abs(float(np.mean(curve))) > 1e-6 or abs(float(np.std(curve)) - 1.0) > 1e-6:
                raise ValueError("curve must be z-normalized (or all zeros)")


def resample_linear(curve: np.ndarray, out_len: int) -> np.ndarray:
    """Linear interpolation onto out_len points spanning the same extent."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.size == out_len:
        return curve.copy()
    if curve.size == 1:
        return np.full(out_len, float(curve[0]))
    src = np.linspace(0.0, 1.0, curve.size)
    dst = np.linspace(0.0, 1.0, out_len)
    return np.interp(dst, src, curve)


def summarize_curve(activations: np.ndarray, out_len: int, source_layer: int) -> FeatureSummary:
    """Channel-mean -> resample to out_len -> z-normalize."""
    acts = np.asarray(activations, dtype=np.float64)
    if acts.ndim != 2 or acts.shape[1] == 0:
        raise ShapeError(f"activations must be (channels, timesteps), got {acts.shape}")
    mean_curve = acts.mean(axis=0)
    return FeatureSummary(znorm(resample_linear(mean_curve, out_len)), source_layer)


def _resolve_layer(model: "Model", layer: int | None) -> int:
    conv_layers = model.spec.conv_layer_indices()
    if not conv_layers:
        raise LayerError("model has no convolution layers")
    if layer is None:
        return conv_layers[-1]
    if layer not in conv_layers:
        raise LayerError(f"layer {layer} is not a convolution layer of this model")
    return layer


def summarize_features(model: "Model", signal: "Signal", layer: int | None = None) -> FeatureSummary:
    """Summary curve for one sample from the given conv layer (default: the
    last conv layer before global pooling)."""
    from ..nn.model import forward

    layer = _resolve_layer(model, layer)
    _, feature_maps = forward(model, signal, keep_layers=(layer,))
    acts = {fm.layer_index: fm.activations for fm in feature_maps}[layer]
    return summarize_curve(acts, len(signal), layer)


# ---------------------------------------------------------------------------
# metric triples


@dataclass(frozen=True)
class MetricTriple:
    sample_id: str
    dtw: float
    mse: float
    slack: float

    def __post_init__(self) -> None:
        for name in ("dtw", "mse", "slack"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def value(self, metric: str) -> float:
        if metric not in ("dtw", "mse", "slack"):
            raise KeyError(f"unknown metric {metric!r}")
        return float(getattr(self, metric))


def cwt_mse(signal: "Signal", summary: FeatureSummary, scales=None) -> float:
    """Scalogram MSE between the z-normalized signal and the summary curve."""
    if len(signal) != summary.curve.size:
        raise ShapeError(
            f"signal length {len(signal)} != summary length {summary.curve.size}"
        )
    if scales is None:
        scales = default_scales(len(signal))
    a = cwt(znorm(signal.samples), scales)
    b = cwt(summary.curve, scales)
    return scalogram_mse(a, b)


def slack(signal: "Signal", summary: FeatureSummary, **peak_kwargs) -> float:
    """Rhythm deviation between detected peaks of signal and summary curve."""
    if len(signal) != summary.curve.size:
        raise ShapeError(
            f"signal length {len(signal)} != summary length {summary.curve.size}"
        )
    ori = detect_r_peaks(signal.samples, **peak_kwargs)
    pred = detect_r_peaks(summary.curve, **peak_kwargs)
    return slack_from_intervals(ori.rr_intervals, pred.rr_intervals)


def score_against_summary(
    signal: "Signal", summary: FeatureSummary, scales=None
) -> MetricTriple:
    """All three metrics of a sample against a given summary curve."""
    d = dtw_distance(znorm(signal.samples), summary.curve)
    m = cwt_mse(signal, summary, scales)
    s = slack(signal, summary)
    return MetricTriple(signal.id, d, m, s)


def score_sample(
    model: "Model", signal: "Signal", layer: int | None = None, scales=None
) -> MetricTriple:
    """Score one sample against the model's feature summary of it."""
    return score_against_summary(signal, summarize_features(model, signal, layer), scales)


def score_batch(
    model: "Model", ds: "Dataset", layer: int | None = None, scales=None
) -> Mapping[str, MetricTriple]:
    """Score every sample of a dataset; one batched forward pass, then
    per-sample metrics. Keyed by sample id, order-independent by construction."""
    from ..nn.model import forward_batch

    layer = _resolve_layer(model, layer)
    if scales is None and len(ds) > 0:
        scales = default_scales(ds.window_len)
    _, feature_maps = forward_batch(model, ds.stacked(), keep_layers=(layer,))
    acts = feature_maps[layer]  # (n, channels, timesteps)
    out: dict[str, MetricTriple] = {}
    for i, sig in enumerate(ds):
        summary = summarize_curve(acts[i], len(sig), layer)
        out[sig.id] = score_against_summary(sig, summary, scales)
    return out
