"""Synthetic ECG-like signal generator and corruption transforms.

Each beat is a sum of five Gaussian bumps (P, Q, R, S, T) anchored at the
R position; beats are placed at jittered RR intervals on a flat baseline and
white noise is added on top. The generator records ground-truth R-peak sample
indices for every window as dataset side metadata (only beats whose R bump
has positive amplitude count as peaks).

Class morphologies are plain dataclasses, so experiments can define their own
waveform families; the built-in four are named for what distinguishes them:

    normal     regular rhythm, full P-QRS-T complex
    irregular  fast, strongly jittered rhythm with no P wave
    ectopic    tall wide R with deep S and inverted T
    wide_qrs   slow rhythm, broad R/S complex, inverted T
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .signals import ClassLabel, Dataset, DatasetRole, Provenance, Signal, class_name
from .util import round_half_up


@dataclass(frozen=True)
class BumpSpec:
    """One Gaussian component: amplitude (signal units), width (seconds,
    the Gaussian sigma), offset (seconds relative to the beat's R anchor)."""

    amplitude: float
    width: float
    offset: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.amplitude):
            raise ConfigError("bump amplitude must be finite")
        if self.width <= 0:
            raise ConfigError(f"bump width must be > 0, got {self.width}")


@dataclass(frozen=True)
class ClassMorphology:
    name: str
    rr_mean: float
    rr_jitter: float
    p: BumpSpec
    q: BumpSpec
    r: BumpSpec
    s: BumpSpec
    t: BumpSpec

    def __post_init__(self) -> None:
        if self.rr_mean <= 0:
            raise ConfigError(f"rr_mean must be > 0, got {self.rr_mean}")
        if self.rr_jitter < 0:
            raise ConfigError(f"rr_jitter must be >= 0, got {self.rr_jitter}")

    @property
    def bumps(self) -> tuple[BumpSpec, ...]:
        return (self.p, self.q, self.r, self.s, self.t)


def _morph(
    name: str,
    rr_mean: float,
    rr_jitter: float,
    p: tuple[float, float, float],
    q: tuple[float, float, float],
    r: tuple[float, float, float],
    s: tuple[float, float, float],
    t: tuple[float, float, float],
) -> ClassMorphology:
    return ClassMorphology(
        name, rr_mean, rr_jitter,
        BumpSpec(*p), BumpSpec(*q), BumpSpec(*r), BumpSpec(*s), BumpSpec(*t),
    )


# (amplitude, sigma seconds, offset seconds from R anchor)
DEFAULT_CLASSES: tuple[ClassMorphology, ...] = (
    _morph("normal", 1.00, 0.03,
           p=(0.15, 0.035, -0.22), q=(-0.12, 0.018, -0.06),
           r=(1.30, 0.022, 0.0), s=(-0.25, 0.020, 0.06), t=(0.32, 0.070, 0.30)),
    _morph("irregular", 0.70, 0.16,
           p=(0.0, 0.030, -0.18), q=(-0.10, 0.018, -0.05),
           r=(1.25, 0.022, 0.0), s=(-0.22, 0.020, 0.05), t=(0.28, 0.060, 0.24)),
    _morph("ectopic", 0.95, 0.05,
           p=(0.0, 0.030, -0.20), q=(-0.08, 0.020, -0.09),
           r=(1.65, 0.048, 0.0), s=(-0.55, 0.035, 0.10), t=(-0.35, 0.080, 0.32)),
    _morph("wide_qrs", 1.15, 0.04,
           p=(0.13, 0.035, -0.26), q=(-0.10, 0.022, -0.10),
           r=(1.10, 0.055, 0.0), s=(-0.40, 0.045, 0.12), t=(-0.30, 0.085, 0.36)),
)


@dataclass(frozen=True)
class SynthConfig:
    classes: tuple[ClassMorphology, ...] = DEFAULT_CLASSES
    sampling_rate: float = 50.0
    window_len: int = 256
    beats_per_window: int = 5
    noise_amplitude: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ConfigError("need at least 2 classes")
        if self.sampling_rate <= 0:
            raise ConfigError("sampling_rate must be > 0")
        if self.window_len < 8:
            raise ConfigError("window_len must be >= 8")
        if self.beats_per_window < 1:
            raise ConfigError("beats_per_window must be >= 1")
        if self.noise_amplitude < 0:
            raise ConfigError("noise_amplitude must be >= 0")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ConfigError("class morphology names must be unique")


def _render_window(
    cfg: SynthConfig, cls: ClassMorphology, rng: np.random.Generator
) -> tuple[np.ndarray, list[int]]:
    fs = cfg.sampling_rate
    t = np.arange(cfg.window_len, dtype=np.float64) / fs
    x = np.zeros(cfg.window_len, dtype=np.float64)

    rr = cls.rr_mean * (1.0 + cls.rr_jitter * rng.standard_normal(cfg.beats_per_window))
    rr = np.clip(rr, 0.3 * cls.rr_mean, 1.7 * cls.rr_mean)
    anchor = rr[0] * rng.uniform(0.35, 0.65)
    peaks: list[int] = []
    for k in range(cfg.beats_per_window):
        if k > 0:
            anchor += rr[k]
        for bump in cls.bumps:
            if bump.amplitude == 0.0:
                continue
            center = anchor + bump.offset
            x += bump.amplitude * np.exp(-((t - center) ** 2) / (2.0 * bump.width**2))
        if cls.r.amplitude > 0:
            idx = round_half_up((anchor + cls.r.offset) * fs)
            if 0 <= idx < cfg.window_len:
                peaks.append(idx)
    x += cfg.noise_amplitude * rng.standard_normal(cfg.window_len)
    return x, peaks


def generate_synthetic(
    cfg: SynthConfig,
    n_per_class: int,
    role: DatasetRole = DatasetRole.ASSERTED_POOL,
) -> Dataset:
    """n_per_class windows per morphology, deterministic in cfg.seed.

    Sample ids embed the seed ("normal-s7-0003") so datasets generated with
    different seeds never share ids.
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(cfg.seed)
    signals: list[Signal] = []
    peaks: dict[str, tuple[int, ...]] = {}
    for ci, cls in enumerate(cfg.classes):
        label = ClassLabel(ci, cls.name)
        for i in range(n_per_class):
            x, r_idx = _render_window(cfg, cls, rng)
            sid = f"{cls.name}-s{cfg.seed}-{i:04d}"
            signals.append(
                Signal(x, label, sid, cfg.sampling_rate, Provenance.SYNTHETIC)
            )
            peaks[sid] = tuple(r_idx)
    return Dataset(tuple(signals), len(cfg.classes), role, peaks)


# ---------------------------------------------------------------------------
# corruption


class CorruptionKind(str, Enum):
    ADDITIVE_NOISE = "additive_noise"
    FLATLINE_SEGMENT = "flatline_segment"
    LABEL_FLIP = "label_flip"


# corruption strength constants, frozen so runs are comparable
NOISE_SIGMA_FACTOR = 1.2       # additive noise sigma as a multiple of signal std
FLATLINE_SPAN = (0.30, 0.60)   # flattened fraction of the window, uniform draw


def corrupt_samples(
    ds: Dataset,
    fraction: float,
    kinds: Iterable[CorruptionKind | str],
    seed: int,
) -> Dataset:
    """Replace round(fraction * |ds|) signals with corrupted versions.

    Corrupted samples keep their ids (so rejection bookkeeping can track
    them) and get provenance "corrupted"; everything else is untouched.
    Ground-truth R-peak metadata is dropped for corrupted ids.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ConfigError(f"fraction must be in [0, 1], got {fraction}")
    kinds = tuple(sorted(CorruptionKind(k) for k in set(kinds)))
    if not kinds:
        raise ConfigError("kinds must be non-empty")
    n = round_half_up(fraction * len(ds))
    if fraction > 0.0 and n == 0:
        raise ConfigError(
            f"fraction {fraction} selects no samples from {len(ds)} signals"
        )
    if n == 0:
        return ds

    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(ds), size=n, replace=False))
    out = list(ds.signals)
    for idx in chosen:
        sig = out[idx]
        kind = kinds[int(rng.integers(len(kinds)))]
        samples = np.array(sig.samples, dtype=np.float64)
        label = sig.label
        if kind is CorruptionKind.ADDITIVE_NOISE:
            sigma = NOISE_SIGMA_FACTOR * float(np.std(samples)) + 1e-9
            samples = samples + rng.normal(0.0, sigma, samples.size)
        elif kind is CorruptionKind.FLATLINE_SEGMENT:
            span = int(samples.size * rng.uniform(*FLATLINE_SPAN))
            span = max(span, 1)
            start = int(rng.integers(0, samples.size - span + 1))
            samples[start : start + span] = samples[start]
        else:  # label_flip: waveform untouched, label rotated to another class
            shift = 1 + int(rng.integers(ds.class_count - 1))
            new_index = (sig.label.index + shift) % ds.class_count
            label = ClassLabel(new_index, class_name(new_index))
        out[idx] = Signal(
            samples, label, sig.id, sig.sampling_rate, Provenance.CORRUPTED
        )
    corrupted_ids = {out[i].id for i in chosen}
    peaks = None
    if ds.r_peaks is not None:
        peaks = {k: v for k, v in ds.r_peaks.items() if k not in corrupted_ids}
    return Dataset(tuple(out), ds.class_count, ds.role, peaks)


def corrupted_ids(ds: Dataset) -> tuple[str, ...]:
    return tuple(s.id for s in ds if s.provenance is Provenance.CORRUPTED)
