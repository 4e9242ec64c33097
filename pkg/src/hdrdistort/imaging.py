"""Image containers, radiometric conversions and exposure interleaving.

Linear images are plain ``numpy`` arrays of shape ``(H, W, C)`` holding
radiance in normalized units. Integer sensor readings carry their bit depth and
exposure layout in a :class:`QuantizedReading`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    LayoutMismatch,
    NonFiniteInput,
    OddWidth,
    OutOfRange,
    SizeMismatch,
)

LOW, HIGH = 0, 1
EXPOSURES = (LOW, HIGH)
EXPOSURE_NAMES = {LOW: "low", HIGH: "high"}


@dataclass(frozen=True)
class ExposureLayout:
    """Which lines carry which exposure.

    ``axis="column"`` interleaves columns (the CMV12000 arrangement),
    ``axis="row"`` interleaves rows. ``low_parity`` is the index parity of the
    low-exposure lines.
    """

    axis: str = "column"
    low_parity: int = 0

    def __post_init__(self):
        if self.axis not in ("column", "row"):
            raise ValueError(f"layout axis must be 'column' or 'row', got {self.axis!r}")
        if self.low_parity not in (0, 1):
            raise ValueError("low_parity must be 0 or 1")


COLUMN_LAYOUT = ExposureLayout()


@dataclass(frozen=True)
class SensorConfig:
    bit_depth: int = 12
    exposure_ratio: float = 4.0
    burst_length: int = 4
    gamma: float = 2.2
    layout: ExposureLayout = field(default_factory=ExposureLayout)
    alignment: str = "end"

    def __post_init__(self):
        if not 8 <= self.bit_depth <= 16:
            raise ValueError("bit_depth must be in [8, 16]")
        if not self.exposure_ratio >= 1:
            raise ValueError("exposure_ratio must be >= 1")
        if self.burst_length < 1:
            raise ValueError("burst_length must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.alignment not in ("start", "end"):
            raise ValueError("alignment must be 'start' or 'end'")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1


class ExposurePair(NamedTuple):
    low: np.ndarray
    high: np.ndarray


@dataclass(eq=False)
class QuantizedReading:
    """Integer sensor reading, shape ``(H, W, C)``."""

    data: np.ndarray
    bit_depth: int = 12
    layout: ExposureLayout = field(default_factory=ExposureLayout)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise ValueError("reading must be 2-D or 3-D")
        if not 8 <= self.bit_depth <= 16:
            raise ValueError("bit_depth must be in [8, 16]")
        if not np.issubdtype(data.dtype, np.integer):
            if not np.all(np.isfinite(data)) or np.any(data != np.round(data)):
                raise ValueError("reading samples must be integers")
        if data.size and (data.min() < 0 or data.max() > self.max_value):
            raise OutOfRange(f"samples outside [0, {self.max_value}]")
        self.data = data.astype(np.uint16)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def shape(self):
        return self.data.shape

    def exposure_map(self) -> np.ndarray:
        return exposure_map(self.data.shape[:2], self.layout)

    def __eq__(self, other):
        if not isinstance(other, QuantizedReading):
            return NotImplemented
        return (
            self.bit_depth == other.bit_depth
            and self.layout == other.layout
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )


def as_image(image, *, name: str = "image") -> np.ndarray:
    """Coerce to a float ``(H, W, C)`` array and check finiteness and sign."""
    a = np.asarray(image, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError(f"{name} must be 2-D or 3-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{name} contains NaN or infinite samples")
    if a.size and a.min() < 0:
        raise OutOfRange(f"{name} contains negative samples")
    return a


def _check_unit_range(a: np.ndarray, name: str):
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise OutOfRange(f"{name} has samples outside [0, 1]")


def linearize(image, gamma: float = 2.2) -> np.ndarray:
    """Undo display gamma: ``v ** gamma`` for display values in [0, 1]."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    a = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("image contains NaN or infinite samples")
    _check_unit_range(a, "display image")
    return np.power(a, gamma)


def gamma_encode(image, gamma: float = 2.2) -> np.ndarray:
    a = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.power(a, 1.0 / gamma)


def round_half_away(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def quantize(image, bit_depth: int = 12, layout: ExposureLayout | None = None) -> QuantizedReading:
    a = as_image(image)
    _check_unit_range(a, "image")
    m = (1 << bit_depth) - 1
    q = round_half_away(a * m)
    return QuantizedReading(q.astype(np.uint16), bit_depth, layout or ExposureLayout())


def dequantize(reading: QuantizedReading) -> np.ndarray:
    return reading.data.astype(np.float64) / reading.max_value


def exposure_map(shape_hw, layout: ExposureLayout = COLUMN_LAYOUT) -> np.ndarray:
    """``(H, W)`` array of exposure classes, ``LOW`` (0) or ``HIGH`` (1)."""
    h, w = shape_hw
    if layout.axis == "column":
        idx = np.broadcast_to(np.arange(w)[None, :], (h, w))
    else:
        idx = np.broadcast_to(np.arange(h)[:, None], (h, w))
    return ((idx % 2) != layout.low_parity).astype(np.uint8)


def _to_columns(a: np.ndarray, layout: ExposureLayout) -> np.ndarray:
    # row layouts are handled as transposed column layouts
    return a.transpose(1, 0, 2) if layout.axis == "row" else a


def interleave_columns(pair: ExposurePair, layout: ExposureLayout = COLUMN_LAYOUT) -> np.ndarray:
    """Merge half-width low/high subimages into one full-width mosaic."""
    low = np.asarray(pair[0])
    high = np.asarray(pair[1])
    if low.ndim == 2:
        low = low[:, :, None]
    if high.ndim == 2:
        high = high[:, :, None]
    if low.shape != high.shape:
        raise SizeMismatch(f"low {low.shape} and high {high.shape} differ")
    low = _to_columns(low, layout)
    high = _to_columns(high, layout)
    h, w, c = low.shape
    out = np.empty((h, 2 * w, c), dtype=np.result_type(low, high))
    out[:, layout.low_parity :: 2] = low
    out[:, 1 - layout.low_parity :: 2] = high
    return _to_columns(out, layout)


def deinterleave_columns(mosaic, layout: ExposureLayout = COLUMN_LAYOUT) -> ExposurePair:
    """Split a mosaic into its half-width low and high subimages."""
    a = np.asarray(mosaic)
    if a.ndim == 2:
        a = a[:, :, None]
    a = _to_columns(a, layout)
    if a.shape[1] % 2:
        raise OddWidth(f"mosaic has odd interleave dimension {a.shape[1]}")
    low = a[:, layout.low_parity :: 2]
    high = a[:, 1 - layout.low_parity :: 2]
    return ExposurePair(
        np.ascontiguousarray(_to_columns(low, layout)),
        np.ascontiguousarray(_to_columns(high, layout)),
    )


def check_same_reading_geometry(a: QuantizedReading, b: QuantizedReading):
    if a.shape != b.shape:
        raise SizeMismatch(f"reading shapes differ: {a.shape} vs {b.shape}")
    if a.layout != b.layout:
        raise LayoutMismatch(f"reading layouts differ: {a.layout} vs {b.layout}")
    if a.bit_depth != b.bit_depth:
        raise SizeMismatch(f"bit depths differ: {a.bit_depth} vs {b.bit_depth}")
