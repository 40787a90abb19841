"""Small shared helpers: deterministic rounding and seed derivation."""

from __future__ import annotations

import math

# Fixed offsets per rng role so one global seed fans out into decoupled,
# reproducible streams. Values are arbitrary but frozen.
ROLE_OFFSETS: dict[str, int] = {
    "generate": 0,
    "split": 1_000,
    "corrupt": 2_000,
    "init": 3_000,
    "train": 4_000,
    "fine_tune": 5_000,
    "select": 6_000,
    "baseline": 7_000,
    "paradigm": 8_000,
    "batch": 9_000,
}


def round_half_up(x: float) -> int:
    """round() with deterministic half-up ties (round(0.5) -> 1, round(1.5) -> 2)."""
    return int(math.floor(x + 0.5))


def derive_seed(global_seed: int, role: str, index: int = 0) -> int:
    """Seed for one rng role, offset from the single user-facing seed."""
    if role not in ROLE_OFFSETS:
        raise KeyError(f"unknown seed role {role!r}")
    return int(global_seed) + ROLE_OFFSETS[role] + index
