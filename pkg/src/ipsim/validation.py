"""Input validation helpers shared by the simulator modules and estimators.

All violations raise ValueError with a message that names the offending
argument, so CLI layers can map them to a uniform exit code.
"""

from __future__ import annotations

import numpy as np


def as_float_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    return arr


def check_rgb_image(img, name: str = "img") -> np.ndarray:
    """Validate an (H, W, 3) image with all channels in [0, 1]."""
    arr = as_float_array(img, name)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name}: expected (H, W, 3) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: width and height must be >= 1")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name}: channel values must lie in [0, 1]")
    return arr


def check_in_range(value: float, lo: float, hi: float, name: str) -> float:
    if not (lo <= value <= hi):
        raise ValueError(f"{name}: {value!r} outside [{lo}, {hi}]")
    return float(value)


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name}: must be > 0, got {value!r}")
    return float(value)


def check_nonnegative(value: float, name: str) -> float:
    if value < 0:
        raise ValueError(f"{name}: must be >= 0, got {value!r}")
    return float(value)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def check_choice(value, choices, name: str):
    if value not in choices:
        raise ValueError(f"{name}: {value!r} not one of {sorted(choices)}")
    return value
