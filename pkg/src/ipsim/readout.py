"""Edge ADC and the digital post-processing that produces final features.

Per feature: quantize the analog output, subtract the amplifier reference,
reapply the weight-bank normalization scale, and add the digital bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analog import HardwareProfile
from .patches import AnalogFeatureFrame, WeightBank


@dataclass(frozen=True)
class AdcConfig:
    bits: int = 8
    v_lo: float = 0.0
    v_hi: float = 2.0  # default 2 * v_r, putting the reference mid-scale

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("AdcConfig: bits must be >= 1")
        if not self.v_lo < self.v_hi:
            raise ValueError("AdcConfig: require v_lo < v_hi")

    @property
    def max_code(self) -> int:
        return 2 ** self.bits - 1

    @property
    def lsb(self) -> float:
        return (self.v_hi - self.v_lo) / self.max_code


@dataclass(frozen=True)
class DigitalFeatureFrame:
    """Dequantized per-patch feature vectors after the digital stage."""

    patch_indices: np.ndarray  # (n_selected,)
    features: np.ndarray       # (n_selected, M)
    m: int
    frame_index: int = 0
    codes: np.ndarray | None = None  # raw ADC codes when requested

    @property
    def n_selected(self) -> int:
        return len(self.patch_indices)


def adc_convert(v, cfg: AdcConfig):
    """Uniform ADC with round-half-up; out-of-range inputs clamp."""
    vv = np.clip(np.asarray(v, dtype=np.float64), cfg.v_lo, cfg.v_hi)
    code = np.floor((vv - cfg.v_lo) / (cfg.v_hi - cfg.v_lo) * cfg.max_code + 0.5).astype(np.int64)
    return int(code) if np.isscalar(v) else code


def dequantize(code, cfg: AdcConfig):
    return cfg.v_lo + np.asarray(code, dtype=np.float64) / cfg.max_code * (cfg.v_hi - cfg.v_lo)


def digital_out(code, cfg: AdcConfig, v_r: float, bias: float, scale: float = 1.0):
    """Digital stage: dequantize, subtract v_r, rescale, add the bias."""
    c = np.asarray(code)
    if np.any(c < 0) or np.any(c > cfg.max_code):
        raise ValueError(f"code outside [0, {cfg.max_code}]")
    out = (dequantize(c, cfg) - v_r) * scale + bias
    return float(out) if np.isscalar(code) else out


def assemble_features(
    analog: AnalogFeatureFrame,
    cfg: AdcConfig,
    bank: WeightBank,
    profile: HardwareProfile,
    frame_index: int = 0,
    keep_codes: bool = False,
) -> DigitalFeatureFrame:
    """ADC-convert and post-process every feature of every selected patch."""
    if analog.features.size and analog.features.shape[1] != bank.m:
        raise ValueError(f"feature width {analog.features.shape[1]} does not match bank M={bank.m}")
    codes = adc_convert(analog.features, cfg) if analog.features.size else np.empty((0, bank.m), dtype=np.int64)
    digital = (dequantize(codes, cfg) - profile.v_r) * bank.scale + bank.bias[None, :]
    return DigitalFeatureFrame(
        patch_indices=np.asarray(analog.patch_indices, dtype=np.intp),
        features=digital,
        m=bank.m,
        frame_index=frame_index,
        codes=codes if keep_codes else None,
    )
