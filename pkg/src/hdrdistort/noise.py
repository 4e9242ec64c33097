"""Non-parametric per-pixel noise model.

Paired clean/sensor readings are tallied into one conditional histogram per
(channel, exposure); each histogram row ``y`` is turned into an inverse
cumulative table so synthesis draws a sensor value ``x`` from ``p(x | y)``
with a single uniform variate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import rng
from .errors import EmptyModel, SizeMismatch, TooFewReadings
from .imaging import (
    EXPOSURE_NAMES,
    EXPOSURES,
    ExposureLayout,
    QuantizedReading,
    as_image,
    check_same_reading_geometry,
    exposure_map,
    quantize,
    round_half_away,
)
from .tables import CumulativeTable, count_matrix, counts_equal, empty_counts

# ---------------------------------------------------------------------------
# fixed pattern


@dataclass(eq=False)
class FixedPatternMap:
    """Per-pixel additive offsets in quantized units, ``(H, W, C)``."""

    offsets: np.ndarray

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape, dtype=np.float64))


def _class_means(data: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """Mean of each channel within each exposure class, shape ``(2, C)``."""
    means = np.zeros((2, data.shape[2]))
    for e in EXPOSURES:
        sel = classes == e
        if sel.any():
            means[e] = data[sel].mean(axis=0)
    return means


def estimate_fixed_pattern(readings) -> FixedPatternMap:
    """Average residual of each pixel about its frame's per-class channel mean.

    Taking residuals per reading makes the brightness of the calibration
    target cancel, so any static uniform scene works.
    """
    readings = list(readings)
    if len(readings) < 2:
        raise TooFewReadings("fixed-pattern estimation needs at least 2 readings")
    first = readings[0]
    for r in readings[1:]:
        check_same_reading_geometry(first, r)
    classes = first.exposure_map()
    total = np.zeros(first.shape, dtype=np.float64)
    for r in readings:
        data = r.data.astype(np.float64)
        means = _class_means(data, classes)
        total += data - means[classes]
    return FixedPatternMap(total / len(readings))


def remove_fixed_pattern(reading: QuantizedReading, fpn: FixedPatternMap) -> QuantizedReading:
    if fpn.offsets.shape != reading.shape:
        raise SizeMismatch(f"fixed-pattern map {fpn.offsets.shape} vs reading {reading.shape}")
    corrected = round_half_away(reading.data.astype(np.float64) - fpn.offsets)
    corrected = np.clip(corrected, 0, reading.max_value)
    return QuantizedReading(corrected.astype(np.uint16), reading.bit_depth, reading.layout)


# ---------------------------------------------------------------------------
# histograms


@dataclass(eq=False)
class ConditionalHistogram:
    """Counts of sensor value ``x`` given clean value ``y``: ``counts[y, x]``."""

    channel: int
    exposure: int
    bit_depth: int
    counts: object = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = empty_counts(1 << self.bit_depth)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "ConditionalHistogram") -> "ConditionalHistogram":
        if (self.channel, self.exposure, self.bit_depth) != (other.channel, other.exposure, other.bit_depth):
            raise ValueError("cannot merge histograms of different slots")
        return ConditionalHistogram(self.channel, self.exposure, self.bit_depth, self.counts + other.counts)

    def dense_row(self, y: int) -> np.ndarray:
        return self.counts[[y], :].toarray().ravel()

    def __eq__(self, other):
        if not isinstance(other, ConditionalHistogram):
            return NotImplemented
        return (
            (self.channel, self.exposure, self.bit_depth) == (other.channel, other.exposure, other.bit_depth)
            and counts_equal(self.counts, other.counts)
        )


class HistogramSet(dict):
    """Histograms keyed by ``(channel, exposure)``."""

    def __init__(self, channels: int, bit_depth: int, pair_count: int = 0):
        super().__init__()
        self.channels = channels
        self.bit_depth = bit_depth
        self.pair_count = pair_count
        for c in range(channels):
            for e in EXPOSURES:
                self[c, e] = ConditionalHistogram(c, e, bit_depth)

    def merge(self, other: "HistogramSet") -> "HistogramSet":
        if (self.channels, self.bit_depth) != (other.channels, other.bit_depth):
            raise SizeMismatch("histogram sets have different channels or bit depth")
        out = HistogramSet(self.channels, self.bit_depth, self.pair_count + other.pair_count)
        for key in self:
            out[key] = self[key].merge(other[key])
        return out

    def observation_counts(self) -> dict:
        return {key: h.total for key, h in self.items()}


def merge_histograms(parts: Iterable[HistogramSet]) -> HistogramSet:
    parts = list(parts)
    if not parts:
        raise EmptyModel("no histograms to merge")
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


def accumulate_histograms(pairs, channels: int | None = None, bit_depth: int | None = None) -> HistogramSet:
    """Tally every pixel of every ``(clean, distorted)`` pair.

    Distorted readings should already be fixed-pattern corrected. The
    exposure class of each pixel comes from the readings' layout.
    """
    pairs = list(pairs)
    if pairs:
        channels = pairs[0][0].shape[2]
        bit_depth = pairs[0][0].bit_depth
    elif channels is None or bit_depth is None:
        raise EmptyModel("no capture pairs")
    size = 1 << bit_depth
    hs = HistogramSet(channels, bit_depth, pair_count=len(pairs))
    for clean, distorted in pairs:
        check_same_reading_geometry(clean, distorted)
        if clean.shape[2] != channels or clean.bit_depth != bit_depth:
            raise SizeMismatch("all pairs must share channel count and bit depth")
        classes = clean.exposure_map()
        for e in EXPOSURES:
            sel = classes == e
            if not sel.any():
                continue
            ys = clean.data[sel]
            xs = distorted.data[sel]
            for c in range(channels):
                part = count_matrix(ys[:, c], xs[:, c], size)
                hs[c, e].counts = hs[c, e].counts + part
    return hs


# ---------------------------------------------------------------------------
# model


@dataclass(eq=False)
class PixelNoiseModel:
    bit_depth: int
    channels: int
    tables: dict = field(default_factory=dict)
    pair_count: int = 0

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def table(self, c: int, e: int) -> CumulativeTable:
        try:
            return self.tables[c, e]
        except KeyError:
            raise EmptyModel(f"no table for channel {c}, {EXPOSURE_NAMES[e]} exposure", c, e) from None

    def __eq__(self, other):
        if not isinstance(other, PixelNoiseModel):
            return NotImplemented
        return (
            self.bit_depth == other.bit_depth
            and self.channels == other.channels
            and self.tables.keys() == other.tables.keys()
            and all(self.tables[k] == other.tables[k] for k in self.tables)
        )


def build_tables(histograms: HistogramSet) -> dict:
    tables = {}
    for (c, e), h in sorted(histograms.items()):
        if h.total == 0:
            raise EmptyModel(f"channel {c}, {EXPOSURE_NAMES[e]} exposure has no observations", c, e)
        tables[c, e] = CumulativeTable.from_counts(h.counts, histograms.bit_depth)
    return tables


def build_inverse_cumulative(histograms: HistogramSet) -> PixelNoiseModel:
    return PixelNoiseModel(
        histograms.bit_depth, histograms.channels, build_tables(histograms), histograms.pair_count
    )


def sample_pixel(model: PixelNoiseModel, y: int, c: int, e: int, xi: float) -> int:
    """Sensor value for clean value ``y`` at uniform variate ``xi`` in [0, 1)."""
    if not 0 <= y <= model.max_value:
        raise ValueError(f"y={y} outside [0, {model.max_value}]")
    return int(model.table(c, e).sample(np.array([y]), np.array([xi]))[0])


def site_uniforms(seed: int, image_id: int, shape) -> np.ndarray:
    """One variate per ``(pixel_index, channel)`` site of an ``(H, W, C)`` image."""
    h, w, c = shape
    key = rng.stream_key(seed, rng.STREAM_PIXEL, image_id)
    counters = np.arange(h * w * c, dtype=np.uint64)
    return rng.uniform(key, counters, bits=32).reshape(h, w, c)


def apply_pixel_noise(
    clean_mosaic,
    model: PixelNoiseModel,
    seed: int,
    *,
    layout: ExposureLayout | None = None,
    image_id: int = 0,
) -> np.ndarray:
    """Replace every sample of a clean mosaic with a draw from the noise model.

    Draws are keyed on ``(seed, image_id, pixel, channel)``, so any tiling or
    ordering of the work gives the same image.
    """
    img = as_image(clean_mosaic, name="clean mosaic")
    layout = layout or ExposureLayout()
    if img.shape[2] != model.channels:
        raise SizeMismatch(f"image has {img.shape[2]} channels, model has {model.channels}")
    y = quantize(img, model.bit_depth).data.astype(np.int64)
    xi = site_uniforms(seed, image_id, img.shape)
    classes = exposure_map(img.shape[:2], layout)
    x = np.empty_like(y)
    for e in EXPOSURES:
        sel = classes == e
        if not sel.any():
            continue
        for c in range(model.channels):
            x[sel, c] = model.table(c, e).sample(y[sel, c], xi[sel, c])
    return x.astype(np.float64) / model.max_value
