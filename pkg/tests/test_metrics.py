import numpy as np
import pytest
from scipy.ndimage import correlate1d

from hdrdistort.errors import InsufficientBins, SizeMismatch, TooFewReadings
from hdrdistort.imaging import QuantizedReading
from hdrdistort.metrics import (
    apply_hetgauss_noise,
    denormalize_exposures,
    dssim,
    fit_hetgauss,
    gaussian_window,
    normalize_exposures,
    simulate_burst_fusion,
    ssim,
    variance_by_radiance,
)
from hdrdistort.noise import HistogramSet
from hdrdistort.tables import count_matrix


def reference_ssim(a, b):
    """SSIM via scipy filtering, cropped to valid positions."""
    g = gaussian_window()
    def f(x):
        x = correlate1d(correlate1d(x, g, axis=0, mode="constant"), g, axis=1, mode="constant")
        return x[5:-5, 5:-5]
    c1, c2 = 0.01**2, 0.03**2
    ma, mb = f(a), f(b)
    va, vb, cov = f(a * a) - ma**2, f(b * b) - mb**2, f(a * b) - ma * mb
    return (((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma**2 + mb**2 + c1) * (va + vb + c2))).mean()


class TestDSSIM:
    def test_identical(self, gen):
        a = gen.random((20, 20, 3))
        assert dssim(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_constant_closed_form(self):
        # mu 0 and 1, no variance: SSIM = c1 / (1 + c1)
        a, b = np.zeros((16, 16)), np.ones((16, 16))
        assert dssim(a, b) == pytest.approx((1 - 1e-4 / 1.0001) / 2, rel=1e-9)

    def test_matches_filter_reference(self, gen):
        a, b = gen.random((24, 30)), gen.random((24, 30))
        assert ssim(a, b) == pytest.approx(reference_ssim(a, b), abs=1e-10)

    def test_symmetric_and_bounded(self, gen):
        a, b = gen.random((16, 16)), gen.random((16, 16))
        assert dssim(a, b) == pytest.approx(dssim(b, a))
        assert 0 <= dssim(a, b) <= 1

    def test_gaussian_window(self):
        g = gaussian_window()
        assert g.sum() == pytest.approx(1.0)
        assert g[0] / g[5] == pytest.approx(np.exp(-25 / 4.5))

    def test_errors(self):
        with pytest.raises(SizeMismatch):
            dssim(np.zeros((16, 16)), np.zeros((16, 17)))
        with pytest.raises(SizeMismatch):
            dssim(np.zeros((10, 16)), np.zeros((10, 16)))


class TestNormalize:
    def test_low_and_high(self):
        r = QuantizedReading(np.array([[0, 4095, 1024]]))
        low = normalize_exposures([r], "low")[0].ravel()
        high = normalize_exposures([r], "high")[0].ravel()
        assert low[:2].tolist() == [0.0, 4.0]
        assert high[1] == 1.0
        assert high[2] == pytest.approx(0.25, abs=1e-3)

    @pytest.mark.parametrize("mode", ["low", "high"])
    def test_round_trip(self, gen, mode):
        r = QuantizedReading(gen.integers(0, 4096, (4, 4, 1)))
        assert denormalize_exposures(normalize_exposures([r], mode), mode)[0] == r

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            normalize_exposures([], "mid")


class TestVariance:
    def test_known_values(self):
        ref = QuantizedReading(np.array([[5, 7, 5]]))
        reads = [QuantizedReading(np.array([[v, 7, 0]])) for v in (4, 6)]
        curve = variance_by_radiance(reads, ref)
        assert curve.variance[5] == 1.0  # first pixel with level 5 only
        assert curve.variance[7] == 0.0
        assert np.isnan(curve.variance[6])
        assert curve.count[5] == 2

    def test_reference_center(self):
        ref = QuantizedReading(np.array([[5]]))
        reads = [QuantizedReading(np.array([[v]])) for v in (7, 7)]
        assert variance_by_radiance(reads, ref, center="reference").variance[5] == 4.0

    def test_too_few(self):
        with pytest.raises(TooFewReadings):
            variance_by_radiance([QuantizedReading(np.zeros((1, 1), np.uint16))], QuantizedReading(np.zeros((1, 1), np.uint16)))

    def test_to_text(self):
        ref = QuantizedReading(np.array([[3]]))
        reads = [QuantizedReading(np.array([[v]])) for v in (2, 4)]
        text = variance_by_radiance(reads, ref).to_text()
        assert "3 1.0 2" in text.splitlines()


def test_burst_fusion_shapes_and_determinism(gen):
    frames = [gen.random((3, 3)) for _ in range(8)]
    a = simulate_burst_fusion(frames, 5, seed=1)
    assert len(a) == 5 and a[0].shape == (3, 3, 1)
    b = simulate_burst_fusion(frames, 5, seed=1)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(TooFewReadings):
        simulate_burst_fusion(frames[:3])


def test_burst_fusion_averages_distinct_frames():
    frames = [np.full((1, 1), float(10**k)) for k in range(4)]
    out = simulate_burst_fusion(frames, 1, seed=0)[0]
    assert out.item() == pytest.approx(1111 / 4)


def _gaussian_hist(gen, slope, intercept, ys, n):
    hs = HistogramSet(1, 12)
    y = np.repeat(ys, n)
    x = np.clip(np.round(y + gen.normal(0, np.sqrt(slope * y + intercept))), 0, 4095)
    for e in (0, 1):
        hs[0, e].counts = count_matrix(y, x, 4096)
    return hs


def test_hetgauss_fit_recovers_line(gen):
    hs = _gaussian_hist(gen, 0.5, 14.0, np.arange(200, 3800, 100), 4000)
    fit = fit_hetgauss(hs)
    a, b = fit.params[0, 0]
    # rounding adds 1/12 to the variance
    assert a == pytest.approx(0.5, rel=0.05)
    assert b == pytest.approx(14 + 1 / 12, rel=0.2)


def test_hetgauss_needs_two_bins():
    hs = HistogramSet(1, 12)
    for e in (0, 1):
        hs[0, e].counts = count_matrix([100, 100], [99, 101], 4096)
    with pytest.raises(InsufficientBins):
        fit_hetgauss(hs)


def test_hetgauss_noise_sampling(gen):
    hs = _gaussian_hist(gen, 0.5, 14.0, np.arange(200, 3800, 100), 2000)
    fit = fit_hetgauss(hs)
    clean = np.full((200, 200, 1), 2000 / 4095)
    x = apply_hetgauss_noise(clean, fit, seed=1) * 4095
    assert x.var() == pytest.approx(fit.variance(2000, 0, 0) + 1 / 12, rel=0.05)
    assert np.array_equal(x, apply_hetgauss_noise(clean, fit, seed=1) * 4095)
