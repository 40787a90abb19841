"""Dynamic time warping with an absolute-difference local cost.

Full O(n*m) table, no warping window, symmetric in its arguments. The inner
recurrence is compiled with numba (IEEE semantics, fastmath off) because the
scoring loop evaluates it once per sample per selection pass.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import EmptyInputError


@njit("float64(float64[::1], float64[::1])", cache=True)
def _dtw_table(a, b):  # pragma: no cover - exercised through dtw_distance
    n = a.shape[0]
    m = b.shape[0]
    table = np.empty((n + 1, m + 1), dtype=np.float64)
    table[0, 0] = 0.0
    for j in range(1, m + 1):
        table[0, j] = np.inf
    for i in range(1, n + 1):
        table[i, 0] = np.inf
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = abs(a[i - 1] - b[j - 1])
            best = table[i - 1, j - 1]
            if table[i - 1, j] < best:
                best = table[i - 1, j]
            if table[i, j - 1] < best:
                best = table[i, j - 1]
            table[i, j] = cost + best
    return table[n, m]


def _as_sequence(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise EmptyInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def dtw_distance(a, b) -> float:
    """Minimum cumulative |a_i - b_j| over all monotone warping paths."""
    return float(_dtw_table(_as_sequence(a, "a"), _as_sequence(b, "b")))
