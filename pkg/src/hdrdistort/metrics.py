"""Image quality metric and sensor characterization.

``dssim`` uses the standard SSIM configuration (11x11 Gaussian window,
sigma 1.5, K1 = 0.01, K2 = 0.03, data range 1) evaluated over valid window
positions only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import rng
from .errors import InsufficientBins, SizeMismatch, TooFewReadings
from .imaging import EXPOSURES, ExposureLayout, QuantizedReading, as_image, exposure_map, quantize

WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 1.0


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(a: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable correlation over axes 0 and 1, valid positions only
    a = sliding_window_view(a, len(g), axis=0) @ g
    return sliding_window_view(a, len(g), axis=1) @ g


def ssim_map(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise SizeMismatch(f"images differ in shape: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if a.shape[0] < WINDOW or a.shape[1] < WINDOW:
        raise SizeMismatch(f"images must be at least {WINDOW}x{WINDOW}")
    g = gaussian_window()
    c1 = (K1 * DATA_RANGE) ** 2
    c2 = (K2 * DATA_RANGE) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b) -> float:
    return float(ssim_map(a, b).mean())


def dssim(a, b) -> float:
    """Structural dissimilarity ``(1 - SSIM) / 2``; 0 for identical images."""
    return (1.0 - ssim(a, b)) / 2.0


# ---------------------------------------------------------------------------
# pilot experiment


@dataclass
class VarianceCurve:
    """Variance per reference level; undefined levels hold NaN."""

    variance: np.ndarray
    count: np.ndarray
    mode: str | None = None

    @property
    def levels(self) -> np.ndarray:
        return np.arange(len(self.variance))

    @property
    def defined(self) -> np.ndarray:
        return self.count >= 2

    def to_text(self) -> str:
        lines = [f"# mode {self.mode or 'raw'}", "# L variance count"]
        for level in np.flatnonzero(self.count > 0):
            v = self.variance[level]
            lines.append(f"{level} {'nan' if np.isnan(v) else repr(float(v))} {int(self.count[level])}")
        return "\n".join(lines) + "\n"


def normalize_exposures(readings, mode: str, r: float = 4.0) -> list:
    """Put low and high readings on one radiance scale.

    Every reading is first mapped to [0, r] by full scale; high-exposure
    readings are then divided by ``r``. Float arrays are taken to be raw
    reading units of a ``bit_depth``-bit sensor (``QuantizedReading`` carries
    its own).
    """
    if mode not in ("low", "high"):
        raise ValueError("mode must be 'low' or 'high'")
    out = []
    for rd in readings:
        if isinstance(rd, QuantizedReading):
            v = rd.data.astype(np.float64) / rd.max_value * r
        else:
            raise TypeError("normalize_exposures expects QuantizedReading inputs")
        out.append(v / r if mode == "high" else v)
    return out


def denormalize_exposures(values, mode: str, r: float = 4.0, bit_depth: int = 12) -> list:
    """Inverse of :func:`normalize_exposures`."""
    if mode not in ("low", "high"):
        raise ValueError("mode must be 'low' or 'high'")
    m = (1 << bit_depth) - 1
    out = []
    for v in values:
        v = np.asarray(v, dtype=np.float64)
        if mode == "high":
            v = v * r
        x = np.floor(v / r * m + 0.5)
        out.append(QuantizedReading(x.astype(np.uint16), bit_depth))
    return out


def _as_float(rd) -> np.ndarray:
    if isinstance(rd, QuantizedReading):
        return rd.data.astype(np.float64)
    a = np.asarray(rd, dtype=np.float64)
    return a[:, :, None] if a.ndim == 2 else a


def variance_by_radiance(
    readings,
    reference: QuantizedReading,
    mode: str | None = None,
    *,
    ratio: float = 4.0,
    center: str = "mean",
) -> VarianceCurve:
    """Temporal variance of one pixel per reference level.

    For every level ``L`` present in ``reference``, the first pixel in
    row-major (then channel) order with that level is followed across all
    readings. ``center="mean"`` gives the population variance of its values;
    ``center="reference"`` measures the mean squared deviation from the
    reference radiance itself, which also counts clipping bias.

    With ``mode`` set to ``"low"`` or ``"high"`` the readings (quantized, or
    float arrays in raw reading units) are normalized with
    :func:`normalize_exposures` and the reference is read as a low-exposure
    level, so both modes share one radiance scale. ``mode=None`` works in raw
    reading units.
    """
    readings = list(readings)
    if len(readings) < 2:
        raise TooFewReadings("variance needs at least 2 readings")
    if center not in ("mean", "reference"):
        raise ValueError("center must be 'mean' or 'reference'")
    ref = reference.data.reshape(-1).astype(np.int64)
    n_levels = reference.max_value + 1
    levels, first = np.unique(ref, return_index=True)
    stack = np.stack([_as_float(r).reshape(-1) for r in readings])
    if stack.shape[1] != ref.size:
        raise SizeMismatch("readings and reference differ in size")
    values = stack[:, first]

    m = reference.max_value
    ref_values = levels.astype(np.float64)
    if mode is not None:
        if mode not in ("low", "high"):
            raise ValueError("mode must be 'low', 'high' or None")
        values = values / m * ratio
        if mode == "high":
            values = values / ratio
        ref_values = ref_values / m * ratio

    if center == "mean":
        var = values.var(axis=0)
    else:
        var = ((values - ref_values[None, :]) ** 2).mean(axis=0)
    variance = np.full(n_levels, np.nan)
    count = np.zeros(n_levels, dtype=np.int64)
    variance[levels] = var
    count[levels] = len(readings)
    return VarianceCurve(variance, count, mode)


def simulate_burst_fusion(low_readings, n_tuples: int | None = None, seed: int = 0, tuple_size: int = 4) -> list:
    """Average random ``tuple_size``-tuples of readings, drawn without replacement."""
    frames = [_as_float(r) for r in low_readings]
    if len(frames) < tuple_size:
        raise TooFewReadings(f"burst fusion needs at least {tuple_size} readings")
    n_tuples = len(frames) if n_tuples is None else n_tuples
    gen = np.random.default_rng(seed)
    stack = np.stack(frames)
    out = []
    for _ in range(n_tuples):
        pick = np.sort(gen.choice(len(frames), size=tuple_size, replace=False))
        out.append(stack[pick].mean(axis=0))
    return out


# ---------------------------------------------------------------------------
# heteroscedastic Gaussian baseline


@dataclass
class HetGaussFit:
    """``sigma^2(y) = slope * y + intercept`` per ``(channel, exposure)``."""

    bit_depth: int
    params: dict

    def variance(self, y, c: int, e: int):
        a, b = self.params[c, e]
        return a * np.asarray(y, dtype=np.float64) + b


def conditional_moments(hist, min_count: int = 2):
    """``(y, mean, variance, count)`` of every row with at least ``min_count`` samples."""
    counts = hist.counts.tocsr()
    counts.sort_indices()
    ys, means, vars_, ns = [], [], [], []
    for y in np.flatnonzero(np.diff(counts.indptr)):
        lo, hi = counts.indptr[y], counts.indptr[y + 1]
        x = counts.indices[lo:hi].astype(np.float64)
        w = counts.data[lo:hi].astype(np.float64)
        n = w.sum()
        if n < min_count:
            continue
        mu = (w * x).sum() / n
        ys.append(y)
        means.append(mu)
        vars_.append((w * (x - mu) ** 2).sum() / n)
        ns.append(n)
    return np.array(ys), np.array(means), np.array(vars_), np.array(ns)


def _line_fit(ys, var, weights):
    design = np.column_stack([ys, np.ones(len(ys))])
    sw = np.sqrt(weights)
    (a, b), *_ = np.linalg.lstsq(design * sw[:, None], var * sw, rcond=None)
    return float(a), float(b)


def fit_hetgauss(histograms, min_count: int = 2, reweight: int = 3) -> HetGaussFit:
    """Least-squares line through the empirical ``Var(x | y)`` of every slot.

    The first pass is ordinary least squares. Each of the ``reweight`` passes
    that follow weights bin ``y`` by ``n / (2 sigma^4)`` with ``sigma^2`` taken
    from the previous line, the inverse sampling variance of a Gaussian
    variance estimate. ``reweight=0`` gives the plain unweighted fit.
    """
    params = {}
    for (c, e), h in sorted(histograms.items()):
        ys, _, var, ns = conditional_moments(h, min_count)
        if len(ys) < 2:
            raise InsufficientBins(f"channel {c}, exposure {e}: need 2 populated bins, have {len(ys)}")
        ys = ys.astype(np.float64)
        a, b = _line_fit(ys, var, np.ones(len(ys)))
        for _ in range(reweight):
            fitted = np.maximum(a * ys + b, max(np.median(var), 1e-12) * 1e-3)
            a, b = _line_fit(ys, var, ns / (2.0 * fitted**2))
        params[c, e] = (a, b)
    return HetGaussFit(histograms.bit_depth, params)


def apply_hetgauss_noise(clean_mosaic, fit: HetGaussFit, seed: int, *, layout=None, image_id: int = 0) -> np.ndarray:
    """Baseline synthesis: ``x ~ round(Normal(y, sigma(y)))``, clipped to range."""
    img = as_image(clean_mosaic)
    layout = layout or ExposureLayout()
    m = (1 << fit.bit_depth) - 1
    y = quantize(img, fit.bit_depth).data.astype(np.float64)
    key = rng.stream_key(seed, rng.STREAM_HETGAUSS, image_id)
    z = rng.normal(key, np.arange(img.size, dtype=np.uint64)).reshape(img.shape)
    classes = exposure_map(img.shape[:2], layout)
    sigma = np.zeros_like(y)
    for e in EXPOSURES:
        sel = classes == e
        for c in range(img.shape[2]):
            sigma[sel, c] = np.sqrt(np.maximum(fit.variance(y[sel, c], c, e), 0.0))
    x = np.clip(np.floor(y + sigma * z + 0.5), 0, m)
    return x / m
