import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrdistort.errors import SizeMismatch, TooFewReadings
from hdrdistort.fusion import (
    FusionWeights,
    bicubic_upsample_width2x,
    direct_fuse,
    ground_truth_average,
    upsample_exposures,
)
from hdrdistort.imaging import ExposureLayout, ExposurePair, QuantizedReading, SensorConfig, interleave_columns


def catmull_rom(t):
    """Catmull-Rom kernel with a = -0.5, evaluated directly."""
    t = abs(t)
    if t <= 1:
        return 1.5 * t**3 - 2.5 * t**2 + 1
    if t < 2:
        return -0.5 * t**3 + 2.5 * t**2 - 4 * t + 2
    return 0.0


def test_midpoint_taps_match_kernel():
    taps = [catmull_rom(d) for d in (1.5, 0.5, 0.5, 1.5)]
    assert taps == pytest.approx([-1 / 16, 9 / 16, 9 / 16, -1 / 16])
    row = np.array([[0.0, 0.0, 16.0, 0.0, 0.0]])
    out = bicubic_upsample_width2x(row, 0)
    assert out[0].tolist() == [0, -1, 0, 9, 16, 9, 0, -1, 0, 0]


@pytest.mark.parametrize("phase", [0, 1])
def test_samples_kept(gen, phase):
    a = gen.random((3, 6))
    out = bicubic_upsample_width2x(a, phase)
    assert np.array_equal(out[:, phase::2], a)


def test_cubic_reproduces_ramp_in_interior():
    a = np.arange(8, dtype=float)[None, :] * 0.1
    out = bicubic_upsample_width2x(a, 0)
    # the clamped edge taps bend the ramp only in the first and last gaps
    assert np.allclose(out[0, 2:-3], np.arange(2, 13) * 0.05)


def test_hat_weights():
    w = FusionWeights()
    assert w.hat([0.0, 0.02, 0.5, 0.98, 1.0]).tolist() == [0.0, 0.0, pytest.approx(0.48), 0.0, 0.0]
    with pytest.raises(ValueError):
        FusionWeights(0.5, 0.4)


def test_constant_scene_recovered_exactly():
    cfg = SensorConfig(exposure_ratio=4)
    low = np.full((4, 4, 3), 0.1)
    mosaic = interleave_columns(ExposurePair(low, low * 4))
    assert np.allclose(direct_fuse(mosaic, cfg), 0.1, atol=1e-12)


def test_clipped_high_uses_low():
    cfg = SensorConfig(exposure_ratio=4)
    mosaic = interleave_columns(ExposurePair(np.full((2, 4, 1), 0.6), np.ones((2, 4, 1))))
    assert np.allclose(direct_fuse(mosaic, cfg), 0.6)


def test_both_unweighted_falls_back_to_low():
    mosaic = interleave_columns(ExposurePair(np.full((2, 4, 1), 0.995), np.ones((2, 4, 1))))
    assert np.allclose(direct_fuse(mosaic), 0.995)


@pytest.mark.parametrize("layout", [ExposureLayout("column", 1), ExposureLayout("row", 0)])
def test_layouts(layout):
    cfg = SensorConfig(layout=layout)
    low = np.full((6, 6, 1), 0.2)
    mosaic = interleave_columns(ExposurePair(low, low * 4), layout)
    lo, hi = upsample_exposures(mosaic, cfg)
    assert lo.shape == hi.shape == (12, 6, 1) if layout.axis == "row" else (6, 12, 1)
    assert np.allclose(direct_fuse(mosaic, cfg), 0.2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.021, 0.245))
def test_property_constant_radiance(v):
    mosaic = interleave_columns(ExposurePair(np.full((2, 6, 1), v), np.full((2, 6, 1), 4 * v)))
    assert np.allclose(direct_fuse(mosaic), v, atol=1e-12)


def test_ground_truth_average():
    caps = [QuantizedReading(np.full((2, 2, 1), k)) for k in (100, 200)]
    ref = ground_truth_average(caps)
    assert np.allclose(ref, 150 / 4095)
    long_cap = QuantizedReading(np.array([[600, 4095], [600, 4095]])[:, :, None])
    out = ground_truth_average(caps, long_cap, r_long=4)
    assert np.allclose(out[:, 0], 600 / 4095 / 4)
    assert np.allclose(out[:, 1], 150 / 4095)
    with pytest.raises(TooFewReadings):
        ground_truth_average(caps[:1])
    with pytest.raises(SizeMismatch):
        ground_truth_average(caps + [QuantizedReading(np.zeros((3, 3, 1), np.uint16))])
