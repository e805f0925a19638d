"""Deterministic counter-based noise streams.

Every stochastic quantity in the simulator is drawn from a Philox
counter-based generator whose 128-bit key is derived from the tuple
(noise_seed, frame, patch, vector).  Pixels take consecutive positions
inside their stream.  Because a stream never depends on how many other
streams were consumed before it, results are bit-identical under any
execution order or thread count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Standard SplitMix64 finalizer; full-avalanche 64-bit mixing.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def stream_key(noise_seed: int, frame: int = 0, patch: int = 0, vector: int = 0) -> np.ndarray:
    """128-bit Philox key for one (seed, frame, patch, vector) stream."""
    h = _splitmix64(int(noise_seed) & _MASK64)
    h = _splitmix64(h ^ _splitmix64((int(frame) & _MASK64) + 0x01))
    lo = _splitmix64(h ^ _splitmix64((int(patch) & _MASK64) + 0x02))
    hi = _splitmix64(lo ^ _splitmix64((int(vector) & _MASK64) + 0x03))
    return np.array([lo, hi], dtype=np.uint64)


def stream(noise_seed: int, frame: int = 0, patch: int = 0, vector: int = 0) -> np.random.Generator:
    key = stream_key(noise_seed, frame, patch, vector)
    return np.random.Generator(np.random.Philox(key=key))


def normal_block(
    n: int,
    sigma: float,
    noise_seed: int,
    frame: int = 0,
    patch: int = 0,
    vector: int = 0,
) -> np.ndarray:
    """Zero-mean Gaussian samples for pixels 0..n-1 of one stream.

    Pixel i always receives the i-th sample of its stream, so the scalar
    and vectorized compute paths see identical noise.
    """
    return stream(noise_seed, frame, patch, vector).normal(0.0, sigma, size=n)


def normal_at(
    pixel: int,
    sigma: float,
    noise_seed: int,
    frame: int = 0,
    patch: int = 0,
    vector: int = 0,
) -> float:
    """The single sample pixel `pixel` would receive from normal_block."""
    return float(normal_block(pixel + 1, sigma, noise_seed, frame, patch, vector)[-1])
