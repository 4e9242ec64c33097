"""Dual-exposure motion blur synthesis from high-speed LDR frames.

The low exposure is a single sharp frame. The high exposure integrates
``n`` consecutive frames, is scaled by the exposure ratio and clipped at the
sensor ceiling. Both are sampled onto their own columns of one mosaic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfBounds, SizeMismatch
from .imaging import ExposurePair, SensorConfig, as_image, deinterleave_columns, interleave_columns


@dataclass(eq=False)
class FrameStack:
    """Linearized frames of one clip, shape ``(N, H, W, C)``."""

    frames: np.ndarray
    nominal_rate: float = 240.0

    def __post_init__(self):
        frames = [as_image(f, name="frame") for f in self.frames]
        if not frames:
            raise ValueError("frame stack is empty")
        shape = frames[0].shape
        for f in frames[1:]:
            if f.shape != shape:
                raise SizeMismatch(f"frame shapes differ: {shape} vs {f.shape}")
        self.frames = np.stack(frames)

    def __len__(self):
        return len(self.frames)

    @property
    def frame_shape(self):
        return self.frames.shape[1:]


def _check_window(stack: FrameStack, t: int, n: int):
    if n < 1:
        raise ValueError("burst length must be >= 1")
    if t < 0 or t + n > len(stack):
        raise IndexOutOfBounds(f"window [{t}, {t + n - 1}] outside stack of {len(stack)} frames")


def simulate_low_frame(stack: FrameStack, t: int, n: int = 1) -> np.ndarray:
    """Frame ``t`` unchanged; ``n`` only checks that the paired window exists."""
    _check_window(stack, t, n)
    return stack.frames[t]


def temporal_mean(frames: np.ndarray) -> np.ndarray:
    """Kahan-compensated mean along the first axis.

    The summation order is fixed by the frame order, so the result does not
    depend on how callers partition the image.
    """
    total = np.zeros(frames.shape[1:], dtype=np.float64)
    comp = np.zeros_like(total)
    for f in frames:
        y = f - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total / len(frames)


def simulate_high_frame(stack: FrameStack, t: int, ratio: float = 4.0, n: int = 4) -> np.ndarray:
    """``min(1, ratio * mean(frames[t:t+n]))``."""
    _check_window(stack, t, n)
    mean = temporal_mean(stack.frames[t : t + n])
    return np.minimum(1.0, ratio * mean)


def low_frame_index(t: int, config: SensorConfig) -> int:
    # both exposures end together under "end" alignment
    return t + config.burst_length - 1 if config.alignment == "end" else t


def synthesize_mb_mosaic(stack: FrameStack, t: int, config: SensorConfig = SensorConfig()) -> np.ndarray:
    """Build the motion-blurred mosaic for the window starting at ``t``."""
    n = config.burst_length
    _check_window(stack, t, n)
    low = simulate_low_frame(stack, low_frame_index(t, config))
    high = simulate_high_frame(stack, t, config.exposure_ratio, n)
    return exposure_mosaic(low, high, config)


def exposure_mosaic(low: np.ndarray, high: np.ndarray, config: SensorConfig = SensorConfig()) -> np.ndarray:
    """Keep each exposure's own columns from two full-resolution images."""
    lay = config.layout
    low_half = deinterleave_columns(low, lay).low
    high_half = deinterleave_columns(high, lay).high
    return interleave_columns(ExposurePair(low_half, high_half), lay)
