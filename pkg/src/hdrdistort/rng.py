"""Stateless counter-based random numbers.

Every draw is a pure function of ``(key, counter)``, so any subset of sites can
be evaluated in any order, in any process, and produce the same values. The
mixing function is the SplitMix64 finalizer applied to a Weyl sequence.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream tags keep the stages' draws independent
STREAM_PIXEL = 1
STREAM_ROWCOL = 2
STREAM_VIRTUAL = 3
STREAM_HETGAUSS = 4
STREAM_PATCH = 5


def _mix(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, *ids: int) -> np.uint64:
    """Fold a seed and any number of integer identifiers into one 64-bit key."""
    key = _mix(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    for i in ids:
        with np.errstate(over="ignore"):
            key = _mix(key ^ _mix(np.uint64(int(i) & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
    return np.uint64(key)


def random_bits(key, counters) -> np.ndarray:
    """64 random bits for each counter value."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (c + np.uint64(1)) * _GOLDEN
    return _mix(z)


def uniform(key, counters, bits: int = 53) -> np.ndarray:
    """Uniform floats in [0, 1) on a grid of ``2**-bits``.

    With ``bits <= 32`` the values stay exactly representable after adding a
    small integer, which the histogram sampler relies on.
    """
    if not 1 <= bits <= 53:
        raise ValueError("bits must be in [1, 53]")
    z = random_bits(key, counters) >> np.uint64(64 - bits)
    return z.astype(np.float64) * (2.0 ** -bits)


def normal(key, counters) -> np.ndarray:
    """Standard normal draws via Box-Muller, consuming counters 2k and 2k+1."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        u1 = 1.0 - uniform(key, c * np.uint64(2))
        u2 = uniform(key, c * np.uint64(2) + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
