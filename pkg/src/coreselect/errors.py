"""Exception types shared across the package.

Every error raised on a contract violation derives from CoreselectError so the
CLI can map failures to a single machine-parsable category line.
"""

from __future__ import annotations


class CoreselectError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CoreselectError):
    """A data file row could not be parsed (bad number, missing field, NaN)."""


class ShapeError(CoreselectError):
    """Array or sequence dimensions violate a contract."""


class LabelError(CoreselectError):
    """A class label index is out of range for the declared class count."""


class EmptyClassError(CoreselectError):
    """An operation requires every class to be populated and one is empty."""


class EmptyInputError(CoreselectError):
    """A sequence argument that must be non-empty is empty."""


class EmptyBatchError(CoreselectError):
    """A dataset argument that must contain samples is empty."""


class ConfigError(CoreselectError):
    """A configuration value or document is invalid."""


class SpecError(CoreselectError):
    """An architecture specification is structurally invalid."""


class LayerError(CoreselectError):
    """A layer index does not name a convolution layer of the model."""


class ScaleError(CoreselectError):
    """A wavelet scale is non-positive or the scale set is too small."""


class DivergenceError(CoreselectError):
    """Training produced a non-finite loss."""


class IoError(CoreselectError):
    """A referenced file is missing or unwritable."""
