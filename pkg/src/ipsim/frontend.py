"""Sensor frontend: everything between photons and the analog compute array.

Stages: optical antialiasing (lenslets + main lens), Bayer mosaicing,
global-shutter exposure to pixel voltages, correlated double sampling,
and the charge dump that clears deselected patches.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .geometry import SelectionMask
from .validation import check_rgb_image, check_same_shape

# Channel sampled at each (row % 2, col % 2) position; MONO handled separately.
BAYER_LAYOUTS = {
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
}
PATTERNS = tuple(BAYER_LAYOUTS) + ("MONO",)

KERNEL_TRUNCATE_SIGMAS = 4.0
_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class ExposureConfig:
    """Global-shutter exposure transfer: volts per unit irradiance-seconds."""

    t_exposure: float          # seconds
    gain: float                # volts per (irradiance * second)
    v_dark: float = 0.0        # volts
    v_sat: float = 1.0         # volts
    fill_factor: float = 1.0   # micro-lens fill, (0, 1]

    def __post_init__(self):
        if self.t_exposure <= 0:
            raise ValueError("t_exposure must be > 0")
        if self.gain < 0:
            raise ValueError("gain must be >= 0")
        if not 0.0 <= self.v_dark < self.v_sat:
            raise ValueError("require 0 <= v_dark < v_sat")
        if not 0.0 < self.fill_factor <= 1.0:
            raise ValueError("fill_factor must be in (0, 1]")


@dataclass(frozen=True)
class BayerFrame:
    """One color sample per pixel, laid out by `pattern`."""

    data: np.ndarray  # (H, W) in [0, 1]
    pattern: str

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AnalogPixelArray:
    """Sampled pixel voltages plus the validity bit cleared by charge dump."""

    voltages: np.ndarray  # (H, W) volts
    valid: np.ndarray     # (H, W) bool

    @property
    def height(self) -> int:
        return self.voltages.shape[0]

    @property
    def width(self) -> int:
        return self.voltages.shape[1]


def _kernel_response(sigma: float, f: float) -> float:
    """DTFT magnitude at frequency f (cycles/px) of the truncated unit-sum kernel."""
    radius = int(math.ceil(KERNEL_TRUNCATE_SIGMAS * sigma))
    n = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (n / sigma) ** 2)
    k /= k.sum()
    return float(np.sum(k * np.cos(2.0 * math.pi * f * n)))


@functools.lru_cache(maxsize=None)
def _sigma_for_cutoff(cutoff_fraction: float) -> float:
    """Spatial sigma whose *discrete* kernel response is 2^-1/2 at the cutoff.

    The continuous-Gaussian closed form sqrt(ln 2)/(2 pi f_c) undershoots
    once the kernel is sampled (spectrum aliasing sharpens the response),
    noticeably so above ~0.4 Nyquist, so the sigma is solved against the
    realized discrete response instead.
    """
    f_c = cutoff_fraction * 0.5
    target = _SQRT_HALF
    lo, hi = 1e-3, math.sqrt(math.log(2.0)) / (2.0 * math.pi * f_c) * 4.0 + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _kernel_response(mid, f_c) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gaussian_kernel(cutoff_fraction: float) -> np.ndarray:
    """1-D unit-sum Gaussian tap set for the requested cutoff fraction."""
    if not 0.0 < cutoff_fraction <= 1.0:
        raise ValueError(f"cutoff_fraction: {cutoff_fraction!r} outside (0, 1]")
    sigma = _sigma_for_cutoff(float(cutoff_fraction))
    radius = int(math.ceil(KERNEL_TRUNCATE_SIGMAS * sigma))
    n = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (n / sigma) ** 2)
    return k / k.sum()


def gaussian_antialias(img: np.ndarray, cutoff_fraction: float) -> np.ndarray:
    """Isotropic Gaussian lowpass with -3dB at cutoff_fraction * Nyquist.

    Separable convolution with mirror-extended borders; DC gain is exactly 1.
    """
    img = check_rgb_image(img)
    kernel = gaussian_kernel(cutoff_fraction)
    out = img
    for axis in (0, 1):
        out = correlate1d(out, kernel, axis=axis, mode="mirror")
    return out


def _channel_index_grid(height: int, width: int, pattern: str) -> np.ndarray:
    layout = BAYER_LAYOUTS[pattern]
    rows = np.arange(height)[:, None] % 2
    cols = np.arange(width)[None, :] % 2
    table = np.asarray(layout)
    return table[rows, cols]


def mosaic_bayer(img: np.ndarray, pattern: str = "RGGB") -> BayerFrame:
    """Sample one color channel per pixel according to the filter pattern.

    MONO takes the green channel as luminance.  No demosaicing happens
    anywhere downstream; the raw mosaic feeds the compute array directly.
    """
    img = check_rgb_image(img)
    if pattern not in PATTERNS:
        raise ValueError(f"pattern: {pattern!r} not one of {PATTERNS}")
    h, w = img.shape[:2]
    if pattern == "MONO":
        return BayerFrame(img[:, :, 1].copy(), pattern)
    if h % 2 or w % 2:
        raise ValueError(f"pattern {pattern}: image dimensions must be even, got {w}x{h}")
    ch = _channel_index_grid(h, w, pattern)
    data = np.take_along_axis(img, ch[:, :, None], axis=2)[:, :, 0]
    return BayerFrame(data, pattern)


def expose(frame: BayerFrame, cfg: ExposureConfig) -> AnalogPixelArray:
    """Global-shutter exposure: every pixel integrates the same window."""
    v = cfg.v_dark + cfg.gain * cfg.fill_factor * frame.data * cfg.t_exposure
    v = np.clip(v, 0.0, cfg.v_sat)
    return AnalogPixelArray(v, np.ones_like(v, dtype=bool))


def cds_sample(
    signal: AnalogPixelArray, reset: AnalogPixelArray, v_sat: float | None = None
) -> AnalogPixelArray:
    """Correlated double sampling: signal minus reset, clamped to [0, v_sat].

    Fixed-pattern offsets present identically in both frames cancel exactly.
    With in-range inputs the upper clamp never binds (signal <= v_sat and
    reset >= 0), so it is applied only when a bound is supplied.
    """
    check_same_shape(signal.voltages, reset.voltages, "cds_sample")
    v = np.clip(signal.voltages - reset.voltages, 0.0, v_sat)
    return AnalogPixelArray(v, signal.valid & reset.valid)


def charge_dump(arr: AnalogPixelArray, selection: SelectionMask) -> AnalogPixelArray:
    """Clear the photo diodes of deselected patches.

    The next read must not see remnant charge, so deselected pixels go to
    0 V and are flagged invalid.  Selected patches are untouched, which
    makes the operation idempotent.
    """
    tiling = selection.tiling
    if (tiling.sensor_w, tiling.sensor_h) != (arr.width, arr.height):
        raise ValueError(
            f"selection tiling {tiling.sensor_w}x{tiling.sensor_h} does not cover "
            f"array {arr.width}x{arr.height}"
        )
    voltages = arr.voltages.copy()
    valid = arr.valid.copy()
    for i in np.flatnonzero(~selection.selected):
        sl = tiling.slices(int(i))
        voltages[sl] = 0.0
        valid[sl] = False
    return AnalogPixelArray(voltages, valid)
