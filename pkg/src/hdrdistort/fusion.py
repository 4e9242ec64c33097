"""Direct (non-learned) HDR fusion of a dual-exposure mosaic.

Each exposure is deinterleaved, brought back to full width with a
Catmull-Rom cubic, aligned to low-exposure units and merged with hat weights
evaluated on the raw values, so clipped or near-black samples drop out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeMismatch, TooFewReadings
from .imaging import SensorConfig, as_image, deinterleave_columns, dequantize

# Catmull-Rom (a = -0.5) weights for the midpoint between two samples
_MIDPOINT_TAPS = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0


@dataclass(frozen=True)
class FusionWeights:
    low_floor: float = 0.02
    high_ceiling: float = 0.98

    def __post_init__(self):
        if not 0.0 <= self.low_floor < self.high_ceiling <= 1.0:
            raise ValueError("need 0 <= low_floor < high_ceiling <= 1")

    def hat(self, v) -> np.ndarray:
        """Triangle weight, zero outside ``(low_floor, high_ceiling)``."""
        v = np.asarray(v, dtype=np.float64)
        w = np.minimum(v - self.low_floor, self.high_ceiling - v)
        return np.maximum(w, 0.0)


def bicubic_upsample_width2x(half, phase: int = 0) -> np.ndarray:
    """Double the width; source column ``j`` lands on output column ``2j + phase``.

    The other columns sit halfway between two source columns and are
    interpolated with edge-clamped Catmull-Rom taps.
    """
    a = np.asarray(half, dtype=np.float64)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[:, :, None]
    h, w, c = a.shape
    idx = np.arange(w)
    if phase == 0:
        # gaps between j and j+1, the last one past the right edge
        base = idx
    elif phase == 1:
        # gaps between j-1 and j, the first one before the left edge
        base = idx - 1
    else:
        raise ValueError("phase must be 0 or 1")
    mid = np.zeros_like(a)
    for k, tap in enumerate(_MIDPOINT_TAPS):
        cols = np.clip(base - 1 + k, 0, w - 1)
        mid += tap * a[:, cols]
    out = np.empty((h, 2 * w, c))
    out[:, phase::2] = a
    out[:, 1 - phase :: 2] = mid
    return out[:, :, 0] if squeeze else out


def _upsample_along(half: np.ndarray, phase: int, axis: str) -> np.ndarray:
    if axis == "row":
        return bicubic_upsample_width2x(half.transpose(1, 0, 2), phase).transpose(1, 0, 2)
    return bicubic_upsample_width2x(half, phase)


def upsample_exposures(mosaic, config: SensorConfig = SensorConfig()):
    """Full-resolution ``(low, high)`` estimates from a mosaic, raw units."""
    lay = config.layout
    pair = deinterleave_columns(as_image(mosaic, name="mosaic"), lay)
    low = _upsample_along(pair.low, lay.low_parity, lay.axis)
    high = _upsample_along(pair.high, 1 - lay.low_parity, lay.axis)
    return low, high


def direct_fuse(mosaic, config: SensorConfig = SensorConfig(), weights: FusionWeights = FusionWeights()) -> np.ndarray:
    """Fuse a mosaic into linear HDR in low-exposure units."""
    low, high = upsample_exposures(mosaic, config)
    r = config.exposure_ratio
    w_l = weights.hat(low)
    w_h = weights.hat(high)
    denom = w_l + w_h
    aligned_high = high / r
    with np.errstate(invalid="ignore", divide="ignore"):
        fused = (w_l * low + w_h * aligned_high) / denom
    return np.where(denom > 0, fused, low)


def ground_truth_average(
    low_captures,
    long_capture=None,
    r_long: float = 1.0,
    high_ceiling: float = 0.98,
) -> np.ndarray:
    """Clean reference from many short captures, refined by one long capture.

    The short captures are averaged; wherever the long capture is below
    ``high_ceiling`` its value divided by ``r_long`` replaces the average.
    """
    low_captures = list(low_captures)
    if len(low_captures) < 2:
        raise TooFewReadings("ground truth needs at least 2 low captures")
    shape = low_captures[0].shape
    total = np.zeros(shape)
    for cap in low_captures:
        if cap.shape != shape:
            raise SizeMismatch(f"capture shapes differ: {shape} vs {cap.shape}")
        total += dequantize(cap)
    ref = total / len(low_captures)
    if long_capture is None:
        return ref
    if long_capture.shape != shape:
        raise SizeMismatch(f"long capture {long_capture.shape} vs {shape}")
    long_v = dequantize(long_capture)
    return np.where(long_v < high_ceiling, long_v / r_long, ref)
