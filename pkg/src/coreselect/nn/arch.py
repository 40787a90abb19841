"""Architecture specifications for the from-scratch 1D CNN.

A network is an ordered tuple of layer specs. Convolutions are valid (no
padding) with a fixed tanh activation; max pooling is non-overlapping and
truncates any remainder; exactly one global average pool collapses time, and
the single dense softmax head must be the final layer. The spec validates
the whole shape chain up front, so a model that builds also runs.

Two reference stacks are provided: architecture_a, a 10-conv ladder widening
16 -> 256 with one mid-network max pool, and architecture_b, six convs, a max
pool, then three convs. Widths and kernel sizes are arguments, the defaults
are the reference values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import SpecError


@dataclass(frozen=True)
class Conv1d:
    out_channels: int
    kernel_size: int

    def __post_init__(self) -> None:
        if self.out_channels < 1:
            raise SpecError(f"conv out_channels must be >= 1, got {self.out_channels}")
        if self.kernel_size < 1:
            raise SpecError(f"conv kernel_size must be >= 1, got {self.kernel_size}")


@dataclass(frozen=True)
class MaxPool:
    window: int

    def __post_init__(self) -> None:
        if self.window < 2:
            raise SpecError(f"max_pool window must be >= 2, got {self.window}")


@dataclass(frozen=True)
class GlobalAvgPool:
    pass


@dataclass(frozen=True)
class DenseSoftmax:
    units: int

    def __post_init__(self) -> None:
        if self.units < 2:
            raise SpecError(f"dense_softmax units must be >= 2, got {self.units}")


LayerSpec = Union[Conv1d, MaxPool, GlobalAvgPool, DenseSoftmax]

_KINDS = {
    "conv1d": Conv1d,
    "max_pool": MaxPool,
    "global_avg_pool": GlobalAvgPool,
    "dense_softmax": DenseSoftmax,
}


@dataclass(frozen=True)
class ArchitectureSpec:
    input_length: int
    layers: tuple[LayerSpec, ...]
    input_channels: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.input_length < 1:
            raise SpecError(f"input_length must be >= 1, got {self.input_length}")
        if self.input_channels < 1:
            raise SpecError(f"input_channels must be >= 1, got {self.input_channels}")
        if not self.layers:
            raise SpecError("architecture has no layers")

        gap_positions = [i for i, l in enumerate(self.layers) if isinstance(l, GlobalAvgPool)]
        dense_positions = [i for i, l in enumerate(self.layers) if isinstance(l, DenseSoftmax)]
        if len(gap_positions) != 1:
            raise SpecError(f"exactly one global_avg_pool required, got {len(gap_positions)}")
        if len(dense_positions) != 1 or dense_positions[0] != len(self.layers) - 1:
            raise SpecError("exactly one dense_softmax required, as the final layer")
        if gap_positions[0] != len(self.layers) - 2:
            raise SpecError("global_avg_pool must be followed only by dense_softmax")

        # walk the shape chain; any impossible layer is a build-time error
        length = self.input_length
        for i, layer in enumerate(self.layers[: gap_positions[0]]):
            if isinstance(layer, Conv1d):
                if layer.kernel_size > length:
                    raise SpecError(
                        f"layer {i}: kernel {layer.kernel_size} exceeds sequence "
                        f"length {length}"
                    )
                length = length - layer.kernel_size + 1
            elif isinstance(layer, MaxPool):
                if layer.window > length:
                    raise SpecError(
                        f"layer {i}: pool window {layer.window} exceeds sequence "
                        f"length {length}"
                    )
                length = length // layer.window
            else:
                raise SpecError(f"layer {i}: {type(layer).__name__} not allowed before global_avg_pool")

    @property
    def class_count(self) -> int:
        last = self.layers[-1]
        assert isinstance(last, DenseSoftmax)
        return last.units

    def conv_layer_indices(self) -> tuple[int, ...]:
        return tuple(i for i, l in enumerate(self.layers) if isinstance(l, Conv1d))

    def sequence_lengths(self) -> tuple[int, ...]:
        """Timestep count after each layer up to (and excluding) the head."""
        length = self.input_length
        out = []
        for layer in self.layers:
            if isinstance(layer, Conv1d):
                length = length - layer.kernel_size + 1
            elif isinstance(layer, MaxPool):
                length = length // layer.window
            elif isinstance(layer, GlobalAvgPool):
                length = 1
            out.append(length)
        return tuple(out)

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            if isinstance(layer, Conv1d):
                layers.append(
                    {"kind": "conv1d", "out_channels": layer.out_channels,
                     "kernel_size": layer.kernel_size}
                )
            elif isinstance(layer, MaxPool):
                layers.append({"kind": "max_pool", "window": layer.window})
            elif isinstance(layer, GlobalAvgPool):
                layers.append({"kind": "global_avg_pool"})
            else:
                layers.append({"kind": "dense_softmax", "units": layer.units})
        return {
            "input_length": self.input_length,
            "input_channels": self.input_channels,
            "layers": layers,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArchitectureSpec":
        layers = []
        for entry in data["layers"]:
            entry = dict(entry)
            kind = entry.pop("kind", None)
            if kind not in _KINDS:
                raise SpecError(f"unknown layer kind {kind!r}")
            try:
                layers.append(_KINDS[kind](**entry))
            except TypeError as exc:
                raise SpecError(f"bad fields for layer {kind}: {exc}") from None
        return cls(
            input_length=int(data["input_length"]),
            layers=tuple(layers),
            input_channels=int(data.get("input_channels", 1)),
        )


def layer_spec_from_dict(entry: dict) -> LayerSpec:
    entry = dict(entry)
    kind = entry.pop("kind", None)
    if kind not in _KINDS:
        raise SpecError(f"unknown layer kind {kind!r}")
    try:
        return _KINDS[kind](**entry)
    except TypeError as exc:
        raise SpecError(f"bad fields for layer {kind}: {exc}") from None


def architecture_a(
    input_length: int,
    class_count: int,
    channels: tuple[int, ...] = (16, 16, 32, 32, 64, 64, 128, 128, 256, 256),
    kernel_size: int = 5,
    pool_window: int = 2,
    pool_after: int = 5,
) -> ArchitectureSpec:
    """Reference deep stack: len(channels) convs with one mid-network max
    pool (after pool_after convs), then global average pool and softmax."""
    if not (0 < pool_after <= len(channels)):
        raise SpecError(f"pool_after must be in 1..{len(channels)}")
    layers: list[LayerSpec] = []
    for i, ch in enumerate(channels):
        layers.append(Conv1d(ch, kernel_size))
        if i + 1 == pool_after:
            layers.append(MaxPool(pool_window))
    layers += [GlobalAvgPool(), DenseSoftmax(class_count)]
    return ArchitectureSpec(input_length, tuple(layers))


def architecture_b(
    input_length: int,
    class_count: int,
    channels_before: tuple[int, ...] = (16, 16, 32, 32, 64, 64),
    channels_after: tuple[int, ...] = (128, 128, 256),
    kernel_size: int = 5,
    pool_window: int = 2,
) -> ArchitectureSpec:
    """Alternative stack: six convs, max pool, three convs, GAP, softmax."""
    layers: list[LayerSpec] = [Conv1d(ch, kernel_size) for ch in channels_before]
    layers.append(MaxPool(pool_window))
    layers += [Conv1d(ch, kernel_size) for ch in channels_after]
    layers += [GlobalAvgPool(), DenseSoftmax(class_count)]
    return ArchitectureSpec(input_length, tuple(layers))


def compact_architecture(
    input_length: int,
    class_count: int,
    channels: tuple[int, ...] = (8, 16, 32),
    kernel_size: int = 5,
    pool_window: int = 2,
) -> ArchitectureSpec:
    """Small stack for desk-scale experiments: convs with a mid max pool."""
    layers: list[LayerSpec] = []
    pool_at = max(1, len(channels) - 1)
    for i, ch in enumerate(channels):
        if i == pool_at:
            layers.append(MaxPool(pool_window))
        layers.append(Conv1d(ch, kernel_size))
    layers += [GlobalAvgPool(), DenseSoftmax(class_count)]
    return ArchitectureSpec(input_length, tuple(layers))
