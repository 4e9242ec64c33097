"""Correlated row/column noise by line-mean matching.

Estimation histograms the per-line mean of each (channel, exposure) class in
the sensor reading against the same mean in the clean reading. Synthesis
draws a target mean for every line and shifts that line's pixels so their
mean lands on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import AxisMismatch, EmptyModel, SizeMismatch
from .imaging import (
    EXPOSURE_NAMES,
    EXPOSURES,
    ExposureLayout,
    as_image,
    check_same_reading_geometry,
    exposure_map,
    round_half_away,
)
from .noise import HistogramSet, build_tables
from .tables import CumulativeTable, count_matrix

AXES = ("row", "column")

# line shifts are snapped to this grid so adding them is exact for any
# sample that is itself a multiple of it
_SHIFT_GRID = 2.0**-52


@dataclass(eq=False)
class RowColNoiseModel:
    axis: str
    bit_depth: int
    channels: int
    tables: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise AxisMismatch(f"axis must be 'row' or 'column', got {self.axis!r}")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def table(self, c: int, e: int) -> CumulativeTable:
        try:
            return self.tables[c, e]
        except KeyError:
            raise EmptyModel(f"no line table for channel {c}, {EXPOSURE_NAMES[e]} exposure", c, e) from None

    def __eq__(self, other):
        if not isinstance(other, RowColNoiseModel):
            return NotImplemented
        return (
            (self.axis, self.bit_depth, self.channels) == (other.axis, other.bit_depth, other.channels)
            and self.tables.keys() == other.tables.keys()
            and all(self.tables[k] == other.tables[k] for k in self.tables)
        )


def line_means(data: np.ndarray, classes: np.ndarray, axis: str):
    """Per-line, per-class channel means.

    Returns ``(means, counts)`` with ``means`` of shape ``(L, C, 2)`` and
    ``counts`` of shape ``(L, 2)``; lines with no pixel of a class have count 0.
    """
    reduce_axis = 1 if axis == "row" else 0
    n_lines = data.shape[1 - reduce_axis]
    means = np.zeros((n_lines, data.shape[2], 2))
    counts = np.zeros((n_lines, 2), dtype=np.int64)
    for e in EXPOSURES:
        mask = classes == e
        n = mask.sum(axis=reduce_axis)
        s = np.where(mask[:, :, None], data, 0.0).sum(axis=reduce_axis)
        counts[:, e] = n
        means[:, :, e] = s / np.maximum(n, 1)[:, None]
    return means, counts


def accumulate_line_histograms(pairs, axis: str = "row") -> HistogramSet:
    if axis not in AXES:
        raise AxisMismatch(f"axis must be 'row' or 'column', got {axis!r}")
    pairs = list(pairs)
    if not pairs:
        raise EmptyModel("no capture pairs")
    channels = pairs[0][0].shape[2]
    bit_depth = pairs[0][0].bit_depth
    size = 1 << bit_depth
    hs = HistogramSet(channels, bit_depth, pair_count=len(pairs))
    for clean, distorted in pairs:
        check_same_reading_geometry(clean, distorted)
        if clean.shape[2] != channels or clean.bit_depth != bit_depth:
            raise SizeMismatch("all pairs must share channel count and bit depth")
        classes = clean.exposure_map()
        ybar, counts = line_means(clean.data.astype(np.float64), classes, axis)
        xbar, _ = line_means(distorted.data.astype(np.float64), classes, axis)
        # means on the 2**B grid over [0, 1] are the rounded integer-unit means
        yq = round_half_away(ybar).astype(np.int64)
        xq = round_half_away(xbar).astype(np.int64)
        for e in EXPOSURES:
            lines = counts[:, e] > 0
            for c in range(channels):
                part = count_matrix(yq[lines, c, e], xq[lines, c, e], size)
                hs[c, e].counts = hs[c, e].counts + part
    return hs


def estimate_rowcol_model(pairs, axis: str = "row") -> RowColNoiseModel:
    hs = accumulate_line_histograms(pairs, axis)
    return RowColNoiseModel(axis, hs.bit_depth, hs.channels, build_tables(hs))


def line_uniforms(seed: int, image_id: int, axis: str, n_lines: int, channels: int) -> np.ndarray:
    """Variates keyed on ``(seed, line, channel, class)``, shape ``(L, C, 2)``."""
    key = rng.stream_key(seed, rng.STREAM_ROWCOL, image_id, AXES.index(axis))
    counters = np.arange(n_lines * channels * 2, dtype=np.uint64)
    return rng.uniform(key, counters, bits=32).reshape(n_lines, channels, 2)


def sample_line_targets(image, model: RowColNoiseModel, seed: int, *, layout=None, image_id: int = 0):
    """Current line means, drawn target means and class counts.

    Returns ``(means, targets, counts)``; the first two have shape
    ``(L, C, 2)`` in normalized units.
    """
    img = as_image(image)
    layout = layout or ExposureLayout()
    classes = exposure_map(img.shape[:2], layout)
    means, counts = line_means(img, classes, model.axis)
    n_lines = means.shape[0]
    xi = line_uniforms(seed, image_id, model.axis, n_lines, img.shape[2])
    m = model.max_value
    current = np.clip(round_half_away(means * m), 0, m).astype(np.int64)
    targets = np.zeros_like(means)
    for e in EXPOSURES:
        lines = counts[:, e] > 0
        if not lines.any():
            continue
        for c in range(img.shape[2]):
            idx = model.table(c, e).sample(current[lines, c, e], xi[lines, c, e])
            targets[lines, c, e] = idx / m
    return means, targets, counts


def apply_rowcol_noise(
    image,
    model: RowColNoiseModel,
    seed: int,
    *,
    layout: ExposureLayout | None = None,
    image_id: int = 0,
    axis: str | None = None,
) -> np.ndarray:
    """Shift every line of every class so its mean equals a drawn target.

    The result is clipped to [0, 1]; lines that clip no longer match exactly.
    """
    if axis is not None and axis != model.axis:
        raise AxisMismatch(f"model was estimated along {model.axis}s, not {axis}s")
    img = as_image(image)
    if img.shape[2] != model.channels:
        raise SizeMismatch(f"image has {img.shape[2]} channels, model has {model.channels}")
    layout = layout or ExposureLayout()
    means, targets, _ = sample_line_targets(img, model, seed, layout=layout, image_id=image_id)
    shifts = np.rint((targets - means) / _SHIFT_GRID) * _SHIFT_GRID
    classes = exposure_map(img.shape[:2], layout)
    if model.axis == "row":
        line = np.broadcast_to(np.arange(img.shape[0])[:, None], classes.shape)
    else:
        line = np.broadcast_to(np.arange(img.shape[1])[None, :], classes.shape)
    # shifts[line, :, class] for every pixel, shape (H, W, C)
    per_pixel = shifts.transpose(0, 2, 1)[line, classes]
    return np.clip(img + per_pixel, 0.0, 1.0)
