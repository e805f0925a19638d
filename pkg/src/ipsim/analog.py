"""Behavioral models of the switched-capacitor compute primitives.

The primitives are deliberately small: a PWM current-modulated multiply
that stores a charge per pixel, charge-sharing summation with either
passive droop or op-amp compensation, capacitive division, series
add/subtract, the 2T activation stage, and the power-of-2 coefficient
quantizer used by the attention layer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import noise
from .validation import check_nonnegative

# Passive summation droops 10% over a 10 us hold; an exponential RC leak
# with this time constant reproduces that point exactly.
TAU_LEAK_DEFAULT = 1.0e-5 / math.log(10.0 / 9.0)  # ~94.9 us


@dataclass(frozen=True)
class HardwareProfile:
    """Physical and calibration constants of the in-pixel circuit."""

    v_r: float = 1.0                 # amplifier reference, volts
    v_sat: float = 1.0               # pixel/cap saturation, volts
    c_unit: float = 30e-15           # per-pixel storage cap, farads
    tau_leak: float = TAU_LEAK_DEFAULT
    opamp_residual: float = 0.0      # residual droop fraction in op-amp mode
    pwm_bits: int = 8                # pulse-width quantizer resolution
    weight_dac_bits: int = 8         # weight DAC resolution
    enob_analog: float | None = 6.0  # ENOB of injected analog noise; None = noise off
    noise_seed: int = 0
    v_scale: float = 0.1             # sigmoid slope constant, volts

    def __post_init__(self):
        if self.v_r <= 0 or self.v_sat <= 0 or self.c_unit <= 0 or self.tau_leak <= 0:
            raise ValueError("HardwareProfile: physical constants must be > 0")
        if self.pwm_bits < 1 or self.weight_dac_bits < 1:
            raise ValueError("HardwareProfile: quantizer bit widths must be >= 1")
        if not 0.0 <= self.opamp_residual < 1.0:
            raise ValueError("HardwareProfile: opamp_residual must be in [0, 1)")

    @classmethod
    def ideal(cls, **overrides) -> "HardwareProfile":
        """Profile with noise off and quantizers fine enough to be invisible."""
        kwargs = dict(pwm_bits=24, weight_dac_bits=24, enob_analog=None)
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def noise_sigma(self) -> float:
        """Std-dev of the additive analog noise, volts (0 when disabled)."""
        if self.enob_analog is None:
            return 0.0
        return self.v_sat / (2.0 ** self.enob_analog * math.sqrt(12.0))

    @property
    def pixel_lsb(self) -> float:
        return self.v_sat / 2.0 ** self.pwm_bits

    @property
    def weight_lsb(self) -> float:
        return 2.0 ** (1 - self.weight_dac_bits)


@dataclass(frozen=True)
class CapCharge:
    """Charge on one storage cap, encoded as a signed voltage.

    Negative voltage encodes reversed polarity (negative-current charging).
    """

    voltage: float


class SumVariant(enum.Enum):
    PASSIVE = "passive"
    OPAMP = "opamp"


@dataclass(frozen=True)
class SumMode:
    variant: SumVariant = SumVariant.OPAMP
    hold_time: float = 0.0  # seconds, PASSIVE only

    def __post_init__(self):
        check_nonnegative(self.hold_time, "hold_time")

    @classmethod
    def opamp(cls) -> "SumMode":
        return cls(SumVariant.OPAMP)

    @classmethod
    def passive(cls, hold_time: float) -> "SumMode":
        return cls(SumVariant.PASSIVE, hold_time)

    def droop_factor(self, profile: HardwareProfile) -> float:
        if self.variant is SumVariant.PASSIVE:
            return math.exp(-self.hold_time / profile.tau_leak)
        return 1.0 - profile.opamp_residual


def quantize_pixel(pixel_v, profile: HardwareProfile):
    """Pulse-width quantization: 2^pwm_bits uniform steps over [0, v_sat]."""
    lsb = profile.pixel_lsb
    return np.rint(np.asarray(pixel_v, dtype=np.float64) / lsb) * lsb


def quantize_weight(weight, profile: HardwareProfile):
    """Weight-DAC quantization: 2^weight_dac_bits signed uniform steps over [-1, 1]."""
    lsb = profile.weight_lsb
    q = np.rint(np.asarray(weight, dtype=np.float64) / lsb) * lsb
    return np.clip(q, -1.0, 1.0)


def pwm_multiply(
    pixel_v: float,
    weight: float,
    profile: HardwareProfile,
    frame: int = 0,
    patch: int = 0,
    vector: int = 0,
    pixel: int = 0,
) -> CapCharge:
    """Charge one pixel cap with the PWM-modulated product weight * pixel_v.

    The pulse width quantizes the pixel voltage, the weight DAC quantizes
    the weight, and the configured analog noise is added on top.  Negative
    weights charge with a negative current.
    """
    if not 0.0 <= pixel_v <= profile.v_sat:
        raise ValueError(f"pixel_v: {pixel_v!r} outside [0, {profile.v_sat}]")
    if abs(weight) > 1.0:
        raise ValueError(f"weight: {weight!r} outside [-1, 1]")
    value = float(quantize_pixel(pixel_v, profile)) * float(quantize_weight(weight, profile))
    sigma = profile.noise_sigma
    if sigma > 0.0:
        value += noise.normal_at(pixel, sigma, profile.noise_seed, frame, patch, vector)
    value = min(max(value, -profile.v_sat), profile.v_sat)
    return CapCharge(value)


def pwm_multiply_block(
    pixels: np.ndarray,
    weights: np.ndarray,
    profile: HardwareProfile,
    frame: int = 0,
    patch: int = 0,
    vector: int = 0,
) -> np.ndarray:
    """Vectorized pwm_multiply over all pixels of one patch-vector.

    Element i equals pwm_multiply(pixels[i], weights[i], ..., pixel=i).
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if pixels.shape != weights.shape:
        raise ValueError(f"pixels/weights shape mismatch {pixels.shape} vs {weights.shape}")
    if pixels.size and (pixels.min() < 0.0 or pixels.max() > profile.v_sat):
        raise ValueError("pixels outside [0, v_sat]")
    if weights.size and np.abs(weights).max() > 1.0:
        raise ValueError("weights outside [-1, 1]")
    values = quantize_pixel(pixels, profile) * quantize_weight(weights, profile)
    sigma = profile.noise_sigma
    if sigma > 0.0:
        values = values + noise.normal_block(
            values.size, sigma, profile.noise_seed, frame, patch, vector
        ).reshape(values.shape)
    return np.clip(values, -profile.v_sat, profile.v_sat)


def _voltages(charges) -> np.ndarray:
    if isinstance(charges, np.ndarray):
        return charges.astype(np.float64, copy=False)
    vals = [c.voltage if isinstance(c, CapCharge) else float(c) for c in charges]
    return np.asarray(vals, dtype=np.float64)


def charge_share_sum(charges, mode: SumMode, profile: HardwareProfile) -> float:
    """Redistribute charge over equal caps: the mean voltage, scaled by droop.

    PASSIVE mode decays by exp(-hold_time/tau_leak); OPAMP mode holds the
    sum in the amplifier feedback loop, leaving only the configured residual.
    """
    v = _voltages(charges)
    if v.size == 0:
        raise ValueError("charge_share_sum: empty capacitor list")
    return float(v.mean() * mode.droop_factor(profile))


def quantized_divide(v: float, k_extra: int) -> float:
    """Switch k_extra additional equal caps onto a charged cap: v/(1+k_extra)."""
    if k_extra < 0:
        raise ValueError(f"k_extra: must be >= 0, got {k_extra}")
    return float(v) / (1 + int(k_extra))


def series_combine(terms) -> float:
    """Signed series connection of charged caps: sum of sign_j * v_j.

    Subtraction is polarity reversal before connecting, hence sign -1.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("series_combine: empty term list")
    total = 0.0
    for v, sign in terms:
        if sign not in (+1, -1):
            raise ValueError(f"series_combine: sign must be +1 or -1, got {sign!r}")
        total += sign * float(v)
    return total


class ActivationKind(enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"


def activation(v: float, bias: float, kind: ActivationKind, profile: HardwareProfile) -> float:
    """2T activation stage: ReLU or logistic sigmoid selected by bias wiring."""
    if kind is ActivationKind.RELU:
        return max(0.0, float(v) - float(bias))
    if kind is ActivationKind.SIGMOID:
        return profile.v_sat / (1.0 + math.exp(-(float(v) - float(bias)) / profile.v_scale))
    raise ValueError(f"activation: unknown kind {kind!r}")


_SQRT_HALF = math.sqrt(0.5)


def qth_quantize(w: float) -> float:
    """Snap a coefficient to the nearest signed power of two (exponent ties up).

    Implemented on the exact (mantissa, exponent) decomposition so the
    relative error never exceeds sqrt(2) - 1.
    """
    w = float(w)
    if w == 0.0:
        return 0.0
    m, e = math.frexp(abs(w))  # abs(w) = m * 2**e, m in [0.5, 1)
    exponent = e if m >= _SQRT_HALF else e - 1
    return math.copysign(math.ldexp(1.0, exponent), w)


def qth_quantize_array(w) -> np.ndarray:
    """Vectorized qth_quantize."""
    w = np.asarray(w, dtype=np.float64)
    m, e = np.frexp(np.abs(w))
    exponent = np.where(m >= _SQRT_HALF, e, e - 1)
    out = np.ldexp(1.0, exponent) * np.sign(w)
    return np.where(w == 0.0, 0.0, out)
