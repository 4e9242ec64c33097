# coding: utf-8

# # Does a burst of short exposures beat one long exposure?
#
# Averaging four short frames against one frame four times longer. Below the
# point where the long frame clips the long frame is cleaner; above it the
# clipped long frame is useless.

import numpy as np

from hdrdistort import QuantizedReading, simulate_burst_fusion, variance_by_radiance
from hdrdistort.dataset import VirtualSensorParams, virtual_sensor

r, n = 4.0, 200
scene = np.linspace(0.02, 1.0, 1024).reshape(32, 32)
sensor = VirtualSensorParams(gain=0.25, read_noise=400)

low = [virtual_sensor(scene, sensor, 1, i) for i in range(n)]
high = [virtual_sensor(np.minimum(scene * r, 1.0), sensor, 2, i) for i in range(n)]
mean = np.mean([x.data.astype(float) for x in low], axis=0)
reference = QuantizedReading(np.floor(mean + 0.5).astype(np.uint16), 12)

fused = simulate_burst_fusion(low, n_tuples=n, seed=3)
v_low = variance_by_radiance(fused, reference, "low", ratio=r, center="reference")
v_high = variance_by_radiance(high, reference, "high", ratio=r, center="reference")

for level in (200, 600, 1000, 1100, 1500, 3000):
    near = np.flatnonzero(v_low.defined & v_high.defined)
    L = near[np.argmin(np.abs(near - level))]
    print(f"L={L:5d}  burst {v_low.variance[L]:.2e}  long {v_high.variance[L]:.2e}")
