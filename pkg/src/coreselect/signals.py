"""Core signal and dataset types plus file round-trip and splitting.

Datasets are immutable value objects: every transformation returns a new
Dataset. Files come in two shapes, a wide CSV (id,label,s0..s{L-1}) and a
JSONL form that also carries per-sample provenance. Synthetic generators may
attach ground-truth R-peak locations as side metadata; those are stored in a
sidecar JSONL, one {"id", "r_peaks"} object per line.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyClassError,
    LabelError,
    ParseError,
    ShapeError,
)


class Provenance(str, Enum):
    ASSERTED = "asserted"
    NON_ASSERTED = "non_asserted"
    SYNTHETIC = "synthetic"
    CORRUPTED = "corrupted"


class DatasetRole(str, Enum):
    ASSERTED_POOL = "asserted_pool"
    INCOMING_BATCH = "incoming_batch"
    TEST_SET = "test_set"


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise LabelError(f"class index must be >= 0, got {self.index}")


def _as_float_samples(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"samples must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError("samples must be non-empty")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """One fixed-length single-channel window with its label and provenance."""

    samples: np.ndarray
    label: ClassLabel
    id: str
    sampling_rate: float = 1.0
    provenance: Provenance = Provenance.ASSERTED

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", _as_float_samples(self.samples))
        if not np.all(np.isfinite(self.samples)):
            raise ParseError(f"signal {self.id!r} contains non-finite samples")
        if not (self.sampling_rate > 0):
            raise ConfigError(f"sampling_rate must be > 0, got {self.sampling_rate}")
        if not self.id:
            raise ParseError("signal id must be non-empty")

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of equal-length labelled signals.

    r_peaks optionally carries ground-truth R-peak sample indices per id
    (synthetic data only); it never participates in equality-sensitive IO.
    """

    signals: tuple[Signal, ...]
    class_count: int
    role: DatasetRole = DatasetRole.ASSERTED_POOL
    r_peaks: Mapping[str, tuple[int, ...]] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.class_count < 2:
            raise LabelError(f"class_count must be >= 2, got {self.class_count}")
        object.__setattr__(self, "signals", tuple(self.signals))
        seen: set[str] = set()
        length: int | None = None
        for sig in self.signals:
            if sig.id in seen:
                raise ParseError(f"duplicate signal id {sig.id!r}")
            seen.add(sig.id)
            if length is None:
                length = len(sig)
            elif len(sig) != length:
                raise ShapeError(
                    f"signal {sig.id!r} has length {len(sig)}, expected {length}"
                )
            if sig.label.index >= self.class_count:
                raise LabelError(
                    f"signal {sig.id!r} label {sig.label.index} >= class_count "
                    f"{self.class_count}"
                )

    def __len__(self) -> int:
        return len(self.signals)

    def __iter__(self):
        return iter(self.signals)

    @property
    def window_len(self) -> int:
        if not self.signals:
            raise EmptyClassError("empty dataset has no window length")
        return len(self.signals[0])

    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.signals)

    def labels(self) -> np.ndarray:
        return np.array([s.label.index for s in self.signals], dtype=np.int64)

    def stacked(self) -> np.ndarray:
        """All samples as an (n, window_len) float64 matrix in dataset order."""
        return np.stack([s.samples for s in self.signals]) if self.signals else np.zeros((0, 0))

    def by_class(self) -> dict[int, tuple[Signal, ...]]:
        out: dict[int, list[Signal]] = {c: [] for c in range(self.class_count)}
        for sig in self.signals:
            out[sig.label.index].append(sig)
        return {c: tuple(v) for c, v in out.items()}

    def subset(self, ids: Iterable[str], role: DatasetRole | None = None) -> "Dataset":
        """New dataset with the given ids, preserving this dataset's order."""
        wanted = set(ids)
        kept = tuple(s for s in self.signals if s.id in wanted)
        peaks = None
        if self.r_peaks is not None:
            peaks = {s.id: self.r_peaks[s.id] for s in kept if s.id in self.r_peaks}
        return Dataset(kept, self.class_count, role or self.role, peaks)

    def with_role(self, role: DatasetRole) -> "Dataset":
        return replace(self, role=role)


def class_name(index: int) -> str:
    return f"class_{index}"


# ---------------------------------------------------------------------------
# file round-trip


def _parse_label(raw: object, class_count: int | None, where: str) -> ClassLabel:
    try:
        idx = int(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ParseError(f"{where}: label {raw!r} is not an integer") from None
    if idx < 0:
        raise LabelError(f"{where}: label {idx} is negative")
    if class_count is not None and idx >= class_count:
        raise LabelError(f"{where}: label {idx} >= class_count {class_count}")
    return ClassLabel(idx, class_name(idx))


def _row_samples(fields: Sequence[str], where: str) -> np.ndarray:
    try:
        arr = np.array([float(v) for v in fields], dtype=np.float64)
    except ValueError:
        raise ParseError(f"{where}: non-numeric sample value") from None
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{where}: non-finite sample value")
    return arr


def _default_provenance(role: DatasetRole) -> Provenance:
    if role in (DatasetRole.ASSERTED_POOL, DatasetRole.TEST_SET):
        return Provenance.ASSERTED
    return Provenance.NON_ASSERTED


def load_dataset(
    path: str | Path,
    fmt: str = "auto",
    *,
    sampling_rate: float = 1.0,
    class_count: int | None = None,
    role: DatasetRole = DatasetRole.ASSERTED_POOL,
) -> Dataset:
    """Load a dataset from CSV or JSONL.

    fmt "auto" keys off the file suffix. class_count, when given, is enforced
    (LabelError on violation); otherwise it is inferred as max label + 1 but
    never below 2.
    """
    path = Path(path)
    if fmt == "auto":
        fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    if fmt == "csv":
        signals = _load_csv(path, sampling_rate, class_count, role)
    elif fmt == "jsonl":
        signals = _load_jsonl(path, sampling_rate, class_count, role)
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}")
    if not signals:
        raise ParseError(f"{path}: no samples")
    inferred = max(s.label.index for s in signals) + 1
    count = class_count if class_count is not None else max(inferred, 2)
    return Dataset(tuple(signals), count, role)


def _load_csv(
    path: Path, sampling_rate: float, class_count: int | None, role: DatasetRole
) -> list[Signal]:
    provenance = _default_provenance(role)
    signals: list[Signal] = []
    width: int | None = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if line_no == 1:
                if len(row) < 3 or row[0] != "id" or row[1] != "label":
                    raise ParseError(f"{path}:1: header must be id,label,s0,...")
                width = len(row) - 2
                continue
            if not row:
                continue
            where = f"{path}:{line_no}"
            if len(row) - 2 != width:
                raise ShapeError(
                    f"{where}: row has {len(row) - 2} samples, header declares {width}"
                )
            label = _parse_label(row[1], class_count, where)
            samples = _row_samples(row[2:], where)
            signals.append(Signal(samples, label, row[0], sampling_rate, provenance))
    return signals


def _load_jsonl(
    path: Path, sampling_rate: float, class_count: int | None, role: DatasetRole
) -> list[Signal]:
    default_prov = _default_provenance(role)
    signals: list[Signal] = []
    width: int | None = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{where}: expected a JSON object")
            for key in ("id", "label", "samples"):
                if key not in obj:
                    raise ParseError(f"{where}: missing key {key!r}")
            label = _parse_label(obj["label"], class_count, where)
            raw = obj["samples"]
            if not isinstance(raw, list) or not raw:
                raise ParseError(f"{where}: samples must be a non-empty list")
            samples = _row_samples([str(v) for v in raw], where)
            if width is None:
                width = samples.size
            elif samples.size != width:
                raise ShapeError(
                    f"{where}: row has {samples.size} samples, expected {width}"
                )
            prov = obj.get("provenance")
            try:
                provenance = Provenance(prov) if prov is not None else default_prov
            except ValueError:
                raise ParseError(f"{where}: unknown provenance {prov!r}") from None
            signals.append(
                Signal(samples, label, str(obj["id"]), sampling_rate, provenance)
            )
    return signals


def save_dataset(ds: Dataset, path: str | Path, fmt: str = "auto") -> Path:
    """Write a dataset as CSV or JSONL. Floats use repr so round-trips are exact."""
    path = Path(path)
    if fmt == "auto":
        fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        width = ds.window_len
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "label"] + [f"s{i}" for i in range(width)])
            for sig in ds:
                writer.writerow(
                    [sig.id, sig.label.index] + [repr(float(v)) for v in sig.samples]
                )
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for sig in ds:
                fh.write(
                    json.dumps(
                        {
                            "id": sig.id,
                            "label": sig.label.index,
                            "samples": [float(v) for v in sig.samples],
                            "provenance": sig.provenance.value,
                        }
                    )
                    + "\n"
                )
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}")
    return path


def save_r_peaks(ds: Dataset, path: str | Path) -> Path:
    """Write the ground-truth R-peak sidecar: one {"id", "r_peaks"} per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    peaks = ds.r_peaks or {}
    with open(path, "w") as fh:
        for sig in ds:
            fh.write(
                json.dumps({"id": sig.id, "r_peaks": list(peaks.get(sig.id, ()))})
                + "\n"
            )
    return path


def load_r_peaks(path: str | Path) -> dict[str, tuple[int, ...]]:
    out: dict[str, tuple[int, ...]] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            out[str(obj["id"])] = tuple(int(v) for v in obj["r_peaks"])
    return out


# ---------------------------------------------------------------------------
# splitting


def split_dataset(ds: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split.

    Each class contributes ceil(ratio * n_c) samples to the train side, which
    keeps every per-class train fraction within one sample of the global
    ratio. Selection within a class is a seeded permutation; both outputs
    preserve the original dataset order. Raises EmptyClassError if any class
    index below class_count has no samples.
    """
    if not (0.0 < ratio < 1.0):
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    groups = ds.by_class()
    for c in range(ds.class_count):
        if not groups[c]:
            raise EmptyClassError(f"class {c} has no samples")
    rng = np.random.default_rng(seed)
    train_ids: set[str] = set()
    for c in range(ds.class_count):
        members = groups[c]
        take = math.ceil(ratio * len(members))
        order = rng.permutation(len(members))
        train_ids.update(members[i].id for i in order[:take])
    train = ds.subset(train_ids, role=DatasetRole.ASSERTED_POOL)
    test = ds.subset(
        (s.id for s in ds if s.id not in train_ids), role=DatasetRole.TEST_SET
    )
    return train, test
