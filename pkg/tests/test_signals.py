"""Dataset types, file round-trip, and stratified splitting."""

from __future__ import annotations

import numpy as np
import pytest

from coreselect.errors import (
    ConfigError,
    EmptyClassError,
    LabelError,
    ParseError,
    ShapeError,
)
from coreselect.signals import (
    ClassLabel,
    Dataset,
    DatasetRole,
    Provenance,
    Signal,
    load_dataset,
    load_r_peaks,
    save_dataset,
    save_r_peaks,
    split_dataset,
)


def make_signal(sid: str, label: int, values, fs: float = 1.0) -> Signal:
    return Signal(np.asarray(values, dtype=np.float64), ClassLabel(label, f"c{label}"), sid, fs)


def make_dataset(sizes: dict[int, int], length: int = 8) -> Dataset:
    rng = np.random.default_rng(0)
    signals = []
    for label, count in sorted(sizes.items()):
        for i in range(count):
            signals.append(make_signal(f"c{label}-{i:04d}", label, rng.standard_normal(length)))
    return Dataset(tuple(signals), class_count=max(sizes) + 1)


# ---------------------------------------------------------------------------
# types


def test_signal_requires_1d_nonempty():
    with pytest.raises(ShapeError):
        make_signal("a", 0, np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        make_signal("a", 0, [])


def test_signal_samples_are_float64_readonly():
    sig = make_signal("a", 0, [1, 2, 3])
    assert sig.samples.dtype == np.float64
    with pytest.raises(ValueError):
        sig.samples[0] = 9.0


def test_dataset_rejects_label_out_of_range():
    sig = make_signal("a", 5, [1.0, 2.0])
    with pytest.raises(LabelError):
        Dataset((sig,), class_count=2)


def test_dataset_rejects_duplicate_ids():
    a = make_signal("same", 0, [1.0, 2.0])
    b = make_signal("same", 1, [3.0, 4.0])
    with pytest.raises(ParseError):
        Dataset((a, b), class_count=2)


def test_dataset_rejects_mixed_lengths():
    a = make_signal("a", 0, [1.0, 2.0])
    b = make_signal("b", 1, [1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        Dataset((a, b), class_count=2)


# ---------------------------------------------------------------------------
# file round-trip


def test_csv_load_three_rows(tmp_path):
    p = tmp_path / "d.csv"
    header = "id,label," + ",".join(f"s{i}" for i in range(8))
    rows = [
        "r0,0," + ",".join(str(float(i)) for i in range(8)),
        "r1,1," + ",".join(str(float(i + 1)) for i in range(8)),
        "r2,0," + ",".join("0.5" for _ in range(8)),
    ]
    p.write_text(header + "\n" + "\n".join(rows) + "\n")
    ds = load_dataset(p)
    assert len(ds) == 3
    assert ds.class_count == 2
    assert ds.window_len == 8
    assert ds.ids() == ("r0", "r1", "r2")


def test_csv_nan_row_names_line(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,label,s0,s1\nok,0,1.0,2.0\nbad,1,nan,2.0\n")
    with pytest.raises(ParseError, match=r":3"):
        load_dataset(p)


def test_csv_inconsistent_length_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,label,s0,s1\nok,0,1.0,2.0\nshort,1,1.0\n")
    with pytest.raises(ShapeError, match=r":3"):
        load_dataset(p)


def test_csv_label_beyond_declared_count(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,label,s0,s1\nok,0,1.0,2.0\nbig,7,1.0,2.0\n")
    with pytest.raises(LabelError):
        load_dataset(p, class_count=2)


def test_jsonl_round_trip_exact(tmp_path):
    ds = make_dataset({0: 3, 1: 2}, length=12)
    p = save_dataset(ds, tmp_path / "d.jsonl")
    back = load_dataset(p, class_count=2)
    assert back.ids() == ds.ids()
    assert np.array_equal(back.stacked(), ds.stacked())
    assert [s.label.index for s in back] == [s.label.index for s in ds]


def test_csv_round_trip_exact(tmp_path):
    ds = make_dataset({0: 2, 1: 2}, length=9)
    p = save_dataset(ds, tmp_path / "d.csv")
    back = load_dataset(p, class_count=2)
    assert np.array_equal(back.stacked(), ds.stacked())


def test_jsonl_provenance_round_trip(tmp_path):
    sig = Signal(np.ones(4), ClassLabel(0, "c0"), "x", 1.0, Provenance.CORRUPTED)
    ds = Dataset((sig, make_signal("y", 1, np.zeros(4))), class_count=2)
    back = load_dataset(save_dataset(ds, tmp_path / "d.jsonl"))
    assert back.signals[0].provenance is Provenance.CORRUPTED


def test_jsonl_missing_key_rejected(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"id": "a", "label": 0}\n')
    with pytest.raises(ParseError, match="samples"):
        load_dataset(p)


def test_r_peaks_sidecar_round_trip(tmp_path):
    ds = Dataset(
        (make_signal("a", 0, np.zeros(8)), make_signal("b", 1, np.ones(8))),
        class_count=2,
        r_peaks={"a": (1, 5), "b": ()},
    )
    p = save_r_peaks(ds, tmp_path / "peaks.jsonl")
    assert load_r_peaks(p) == {"a": (1, 5), "b": ()}


# ---------------------------------------------------------------------------
# splitting


def test_split_reproduces_reference_counts():
    # class sizes chosen so ceil-per-class stratification yields the
    # documented 652 -> 460/192 split at ratio 0.7
    ds = make_dataset({0: 203, 1: 163, 2: 143, 3: 143}, length=4)
    assert len(ds) == 652
    train, test = split_dataset(ds, 0.7, seed=5)
    assert (len(train), len(test)) == (460, 192)
    per_class = np.bincount(train.labels(), minlength=4)
    assert per_class.tolist() == [143, 115, 101, 101]
    assert train.role is DatasetRole.ASSERTED_POOL
    assert test.role is DatasetRole.TEST_SET


def test_split_deterministic_and_disjoint():
    ds = make_dataset({0: 7, 1: 3}, length=4)
    a_train, a_test = split_dataset(ds, 0.5, seed=9)
    b_train, b_test = split_dataset(ds, 0.5, seed=9)
    assert a_train.ids() == b_train.ids()
    assert a_test.ids() == b_test.ids()
    assert set(a_train.ids()).isdisjoint(a_test.ids())
    assert set(a_train.ids()) | set(a_test.ids()) == set(ds.ids())


def test_split_two_per_class_half():
    ds = make_dataset({0: 2, 1: 2}, length=4)
    train, test = split_dataset(ds, 0.5, seed=0)
    assert np.bincount(train.labels(), minlength=2).tolist() == [1, 1]
    assert np.bincount(test.labels(), minlength=2).tolist() == [1, 1]


def test_split_fraction_within_one_sample_of_ratio():
    rng = np.random.default_rng(42)
    for _ in range(25):
        sizes = {c: int(rng.integers(2, 40)) for c in range(int(rng.integers(2, 5)))}
        ratio = float(rng.uniform(0.2, 0.9))
        ds = make_dataset(sizes, length=4)
        train, _ = split_dataset(ds, ratio, seed=int(rng.integers(1 << 30)))
        counts = np.bincount(train.labels(), minlength=len(sizes))
        for c, n in sizes.items():
            assert abs(counts[c] - ratio * n) < 1.0


def test_split_empty_class_rejected():
    sigs = tuple(make_signal(f"s{i}", 0, np.zeros(4)) for i in range(4))
    ds = Dataset(sigs, class_count=2)  # class 1 declared but empty
    with pytest.raises(EmptyClassError):
        split_dataset(ds, 0.5, seed=0)


def test_split_ratio_domain():
    ds = make_dataset({0: 4, 1: 4}, length=4)
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ConfigError):
            split_dataset(ds, bad, seed=0)
