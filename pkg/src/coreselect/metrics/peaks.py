"""R-peak detection and the rhythm-deviation score computed from RR intervals.

Detection: strict local maxima above mean + k * std, thinned greedily by
descending amplitude so that no two kept peaks are closer than a minimum
distance (ties broken toward the earlier index). The threshold is affine in
the curve's own statistics, so adding a constant offset cannot change the
result.

Score ("slack"): given the RR interval trains of an original signal and of a
predicted/summary curve,

    score = [ sum_i |rr_ori[i] - rr_pred[i]| / rr_ori[i]  (i over the first
              min(n_ori, n_pred) intervals)
            + |n_ori - n_pred| / n_ori ] * 100

When the original has no RR intervals at all (fewer than two peaks) the score
is the fixed sentinel SLACK_SENTINEL, which callers surface in reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyInputError
from ..util import round_half_up

# a window is assumed to hold about this many beats when no expected beat
# length is supplied (matches the synthetic generator default)
EXPECTED_BEATS_PER_WINDOW = 5.0

SLACK_SENTINEL = 200.0


@dataclass(frozen=True)
class PeakList:
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(i < 0 for i in idx):
            raise ValueError("peak indices must be >= 0")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("peak indices must be strictly increasing")

    @property
    def rr_intervals(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.indices, self.indices[1:]))

    def __len__(self) -> int:
        return len(self.indices)


def detect_r_peaks(
    curve,
    *,
    threshold_sigma: float = 1.5,
    min_distance: int | None = None,
    expected_beat_len: float | None = None,
) -> PeakList:
    """Peaks of a 1-D curve: local maxima above mean + threshold_sigma * std,
    at least min_distance samples apart (default 0.2 * expected beat length)."""
    x = np.asarray(curve, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInputError(f"curve must be non-empty 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("curve contains non-finite values")
    if min_distance is None:
        beat = expected_beat_len or x.size / EXPECTED_BEATS_PER_WINDOW
        min_distance = max(1, round_half_up(0.2 * beat))

    threshold = float(np.mean(x)) + threshold_sigma * float(np.std(x))
    if x.size < 3:
        return PeakList(())
    inner = x[1:-1]
    mask = (inner > x[:-2]) & (inner > x[2:]) & (inner > threshold)
    candidates = np.nonzero(mask)[0] + 1
    if candidates.size == 0:
        return PeakList(())

    # greedy non-maximum suppression, tallest first, earlier index on ties
    order = sorted(candidates, key=lambda i: (-x[i], i))
    kept: list[int] = []
    for i in order:
        if all(abs(i - j) >= min_distance for j in kept):
            kept.append(int(i))
    return PeakList(tuple(sorted(kept)))


def slack_from_intervals(
    rr_ori: Sequence[float], rr_pred: Sequence[float]
) -> float:
    """Rhythm-deviation score between two RR interval trains (percent)."""
    ori = [float(v) for v in rr_ori]
    pred = [float(v) for v in rr_pred]
    if any(v <= 0 for v in ori) or any(v <= 0 for v in pred):
        raise ValueError("RR intervals must be positive")
    if not ori:
        return SLACK_SENTINEL
    n = min(len(ori), len(pred))
    total = 0.0
    for i in range(n):
        total += abs(ori[i] - pred[i]) / ori[i]
    total += abs(len(ori) - len(pred)) / len(ori)
    return 100.0 * total
