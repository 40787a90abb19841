"""Ricker (Mexican hat) continuous wavelet transform.

Conventions, fixed here and relied on by the tests:

  * wavelet: psi(x; a) = 2 / (sqrt(3a) * pi**(1/4)) * (1 - (x/a)^2)
             * exp(-x^2 / (2 a^2))   (unit-energy normalization)
  * support: x in [-ceil(4a), ceil(4a)], always an odd number of taps
  * each scalogram row is the centered same-length convolution of the input
    with psi at that scale (zero padded; psi is even, so convolution equals
    correlation)

A unit impulse at index t therefore reproduces psi(n - t) exactly, which is
the closed-form check used by the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, ScaleError, ShapeError


@dataclass(frozen=True, eq=False)
class Scalogram:
    coefficients: np.ndarray  # (scale_count, length)
    scales: tuple[float, ...]

    def __post_init__(self) -> None:
        coeff = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if len(self.scales) < 2:
            raise ScaleError("a scalogram needs at least two scales")
        if any(s <= 0 for s in self.scales):
            raise ScaleError(f"scales must be positive, got {self.scales}")
        if coeff.ndim != 2 or coeff.shape[0] != len(self.scales):
            raise ShapeError(
                f"coefficients shape {coeff.shape} does not match "
                f"{len(self.scales)} scales"
            )
        if not np.all(np.isfinite(coeff)):
            raise ValueError("scalogram contains non-finite values")


def ricker_taps(scale: float) -> np.ndarray:
    """Discretized wavelet on its support grid [-ceil(4a), ceil(4a)]."""
    if scale <= 0:
        raise ScaleError(f"scale must be > 0, got {scale}")
    half = math.ceil(4.0 * scale)
    x = np.arange(-half, half + 1, dtype=np.float64)
    amp = 2.0 / (math.sqrt(3.0 * scale) * math.pi**0.25)
    return amp * (1.0 - (x / scale) ** 2) * np.exp(-(x**2) / (2.0 * scale**2))


def default_scales(
    window_len: int, count: int = 16, smallest: float = 2.0, largest: float | None = None
) -> tuple[float, ...]:
    """count log-spaced scales spanning [smallest, window_len / 4] by default."""
    if largest is None:
        largest = window_len / 4.0
    if count < 2:
        raise ScaleError("need at least two scales")
    if smallest <= 0 or largest <= smallest:
        raise ScaleError(f"bad scale range [{smallest}, {largest}]")
    return tuple(float(s) for s in np.geomspace(smallest, largest, count))


def cwt(samples, scales) -> Scalogram:
    """Scalogram of a 1-D sequence; one row per scale, each row same length
    as the input."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInputError(f"input must be non-empty 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    scales = tuple(float(s) for s in scales)
    if len(scales) < 2:
        raise ScaleError("need at least two scales")
    rows = np.empty((len(scales), x.size), dtype=np.float64)
    for i, a in enumerate(scales):
        taps = ricker_taps(a)
        half = (taps.size - 1) // 2
        full = np.convolve(x, taps, mode="full")
        rows[i] = full[half : half + x.size]
    return Scalogram(rows, scales)


def scalogram_mse(a: Scalogram, b: Scalogram) -> float:
    """Mean squared difference over all (scale, time) cells; symmetric."""
    if a.coefficients.shape != b.coefficients.shape:
        raise ShapeError(
            f"scalogram shapes differ: {a.coefficients.shape} vs "
            f"{b.coefficients.shape}"
        )
    diff = a.coefficients - b.coefficients
    return float(np.mean(diff * diff))
