import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrdistort.errors import LayoutMismatch, NonFiniteInput, OddWidth, OutOfRange, SizeMismatch
from hdrdistort.imaging import (
    HIGH,
    LOW,
    ExposureLayout,
    ExposurePair,
    QuantizedReading,
    SensorConfig,
    check_same_reading_geometry,
    deinterleave_columns,
    dequantize,
    exposure_map,
    interleave_columns,
    linearize,
    quantize,
)


class TestLinearize:
    def test_fixed_points(self):
        assert linearize(np.array([0.0]))[0] == 0.0
        assert linearize(np.array([1.0]))[0] == 1.0

    def test_half(self):
        # direct evaluation of 0.5 ** 2.2
        assert linearize(np.array([0.5]))[0] == pytest.approx(0.21764, abs=1e-5)
        assert linearize(np.array([0.5]))[0] == 0.5**2.2

    def test_errors(self):
        with pytest.raises(NonFiniteInput):
            linearize(np.array([np.nan]))
        with pytest.raises(NonFiniteInput):
            linearize(np.array([np.inf]))
        with pytest.raises(OutOfRange):
            linearize(np.array([-0.1]))
        with pytest.raises(OutOfRange):
            linearize(np.array([1.5]))

    @given(
        st.floats(0, 1),
        st.floats(0, 1),
        st.floats(0.05, 8.0),
    )
    def test_monotone(self, a, b, gamma):
        lo, hi = sorted((a, b))
        out = linearize(np.array([lo, hi]), gamma)
        assert out[0] <= out[1]


class TestQuantize:
    def test_examples(self):
        q = quantize(np.array([[0.0, 1.0, 0.5]]), 12).data.ravel()
        # round(0.5 * 4095) = round(2047.5) -> 2048 under half-away-from-zero
        assert q.tolist() == [0, 4095, 2048]

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            quantize(np.array([[1.01]]))
        with pytest.raises(OutOfRange):
            quantize(np.array([[-0.01]]))

    def test_dequantize_examples(self):
        r = QuantizedReading(np.array([[0, 4095, 2048]]), 12)
        v = dequantize(r).ravel()
        assert v[0] == 0.0 and v[1] == 1.0
        assert v[2] == pytest.approx(2048 / 4095)
        assert v[2] == pytest.approx(0.500122, abs=1e-6)

    @pytest.mark.parametrize("bits", [8, 10, 12, 14, 16])
    def test_integer_round_trip(self, bits):
        q = np.arange(1 << bits, dtype=np.uint16).reshape(1, -1)
        r = QuantizedReading(q, bits)
        assert quantize(dequantize(r), bits) == r

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=64), st.integers(8, 16))
    def test_float_round_trip_error(self, values, bits):
        v = np.array(values).reshape(1, -1, 1)
        back = dequantize(quantize(v, bits))
        assert np.all(np.abs(back - v) <= 0.5 / ((1 << bits) - 1) + 1e-15)

    def test_reading_range_checked(self):
        with pytest.raises(OutOfRange):
            QuantizedReading(np.array([[4096]]), 12)
        with pytest.raises(OutOfRange):
            QuantizedReading(np.array([[-1]]), 12)


class TestInterleave:
    def test_unrolled(self):
        out = interleave_columns(ExposurePair(np.array([[1.0, 2.0]]), np.array([[9.0, 8.0]])))
        assert out[:, :, 0].tolist() == [[1, 9, 2, 8]]
        pair = deinterleave_columns(out)
        assert pair.low[:, :, 0].tolist() == [[1, 2]]
        assert pair.high[:, :, 0].tolist() == [[9, 8]]

    def test_constant(self):
        c = np.full((3, 4, 3), 0.3)
        out = interleave_columns(ExposurePair(c, c))
        assert out.shape == (3, 8, 3)
        assert np.all(out == 0.3)

    @pytest.mark.parametrize(
        "layout",
        [ExposureLayout(), ExposureLayout("column", 1), ExposureLayout("row", 0), ExposureLayout("row", 1)],
    )
    def test_round_trip(self, gen, layout):
        low = gen.random((8, 8, 3))
        high = gen.random((8, 8, 3))
        pair = deinterleave_columns(interleave_columns(ExposurePair(low, high), layout), layout)
        assert np.array_equal(pair.low, low) and np.array_equal(pair.high, high)

    def test_row_layout_places_rows(self):
        low = np.zeros((1, 3, 1))
        high = np.ones((1, 3, 1))
        out = interleave_columns(ExposurePair(low, high), ExposureLayout("row"))
        assert out.shape == (2, 3, 1)
        assert out[0].max() == 0 and out[1].min() == 1

    def test_low_parity(self):
        out = interleave_columns(ExposurePair(np.zeros((1, 1)), np.ones((1, 1))), ExposureLayout("column", 1))
        assert out[0, :, 0].tolist() == [1, 0]

    def test_errors(self):
        with pytest.raises(SizeMismatch):
            interleave_columns(ExposurePair(np.zeros((2, 2)), np.zeros((2, 3))))
        with pytest.raises(OddWidth):
            deinterleave_columns(np.zeros((2, 3)))

    def test_exposure_map(self):
        m = exposure_map((2, 4))
        assert m.tolist() == [[LOW, HIGH, LOW, HIGH]] * 2
        m = exposure_map((3, 2), ExposureLayout("row", 1))
        assert m[:, 0].tolist() == [HIGH, LOW, HIGH]


def test_sensor_config_invariants():
    SensorConfig()
    for bad in (dict(bit_depth=7), dict(bit_depth=17), dict(exposure_ratio=0.5), dict(burst_length=0), dict(gamma=0)):
        with pytest.raises(ValueError):
            SensorConfig(**bad)


def test_geometry_check():
    a = QuantizedReading(np.zeros((2, 2, 1), np.uint16))
    with pytest.raises(SizeMismatch):
        check_same_reading_geometry(a, QuantizedReading(np.zeros((2, 4, 1), np.uint16)))
    with pytest.raises(LayoutMismatch):
        check_same_reading_geometry(a, QuantizedReading(np.zeros((2, 2, 1), np.uint16), layout=ExposureLayout("row")))
