# coding: utf-8

# # Learning a sensor noise model from capture pairs
#
# We fake a sensor with a known noise law, record clean/noisy pairs, build the
# non-parametric model from them and check that its draws follow the law.

import numpy as np

from hdrdistort import (
    accumulate_histograms,
    apply_pixel_noise,
    build_inverse_cumulative,
    dequantize,
    fit_hetgauss,
)
from hdrdistort.dataset import VirtualSensorParams, virtual_sensor

gen = np.random.default_rng(0)
levels = np.round(np.linspace(0.01, 0.2, 8) * 4095) / 4095


def scene():
    return np.kron(gen.choice(levels, size=(8, 8, 3)), np.ones((16, 16, 1)))


# The "truth": variance 0.5*y + 10 in reading units, plus a per-row offset.

ideal = VirtualSensorParams(ratio=4)
noisy = VirtualSensorParams(gain=0.5, read_noise=10, row_sigma=2, ratio=4)
pairs = []
for i in range(20):
    s = scene()
    pairs.append((virtual_sensor(s, ideal, 0, i), virtual_sensor(s, noisy, 1, i)))

histograms = accumulate_histograms(pairs)
model = build_inverse_cumulative(histograms)
print("observations per (channel, exposure):", histograms.observation_counts())

# Draw fresh noise for an unseen scene and compare to the law.

clean = dequantize(virtual_sensor(scene(), ideal, 0, 99))
noisy_img = apply_pixel_noise(clean, model, seed=7)
y = np.rint(clean * 4095).ravel()
x = np.rint(noisy_img * 4095).ravel()
for v in np.unique(y)[:4]:
    s = x[y == v]
    print(f"y={v:6.0f}  mean {s.mean():8.2f}  std {s.std():6.2f}  law std {np.sqrt(0.5 * v + 14):6.2f}")

# The parametric baseline is a straight line through Var(x | y).

fit = fit_hetgauss(histograms)
print("HetGauss slope/intercept, channel 0 low:", fit.params[0, 0])
