"""Patch-level linear projection over a frame, plus the attention second layer.

Vectorization convention used everywhere: patch pixels are flattened
row-major.  An RGB-trained matrix has channel-minor columns, i.e. the
column for (pixel p, channel c) is 3*p + c; the Bayer-reduced matrix
keeps one column per pixel.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analog import HardwareProfile, SumMode, charge_share_sum, pwm_multiply_block, qth_quantize
from .frontend import BAYER_LAYOUTS, PATTERNS, AnalogPixelArray
from .geometry import PatchTiling, SelectionMask

THREADS_ENV = "IPSIM_THREADS"


class Fidelity(Enum):
    IDEAL = "ideal"
    ANALOG = "analog"


@dataclass(frozen=True)
class WeightBank:
    """Projection weights for one patch geometry.

    `weights` is the (M, pixels) matrix applied in the analog domain; it is
    normalized so max|w| = 1 to use the full weight-DAC range, with the
    normalization factor kept in `scale` and reapplied digitally.  `bias`
    is added in the digital domain only.
    """

    weights: np.ndarray            # (M, columns), |w| <= 1
    bias: np.ndarray               # (M,)
    scale: float = 1.0
    source_rgb: np.ndarray | None = None  # (M, columns*3) ancestor, if known

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        if w.ndim != 2 or w.shape[0] < 1:
            raise ValueError(f"weights: expected (M, columns) with M >= 1, got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias: expected ({w.shape[0]},), got {b.shape}")
        if w.size and np.abs(w).max() > 1.0 + 1e-12:
            raise ValueError("weights: |w| must be <= 1 after normalization")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def columns(self) -> int:
        return self.weights.shape[1]

    @property
    def raw_weights(self) -> np.ndarray:
        """The pre-normalization weights, scale folded back in."""
        return self.weights * self.scale

    @classmethod
    def from_raw(cls, raw_weights, bias, source_rgb=None) -> "WeightBank":
        """Normalize raw weights so max|w| = 1 and record the scale."""
        raw = np.asarray(raw_weights, dtype=np.float64)
        scale = float(np.abs(raw).max()) if raw.size else 0.0
        if scale == 0.0:
            scale = 1.0
        return cls(raw / scale, np.asarray(bias, dtype=np.float64), scale, source_rgb)

    @classmethod
    def from_rgb(cls, rgb_matrix, patch_w: int, patch_h: int, pattern: str, bias) -> "WeightBank":
        """Reduce an RGB-trained matrix to its Bayer form and normalize."""
        rgb = np.asarray(rgb_matrix, dtype=np.float64)
        reduced = strike_columns(rgb, patch_w, patch_h, pattern)
        return cls.from_raw(reduced, bias, source_rgb=rgb)


def bayer_channel_of_pixel(patch_w: int, patch_h: int, pattern: str) -> np.ndarray:
    """Channel index (0=R,1=G,2=B) sampled at each flattened patch pixel."""
    if pattern not in PATTERNS:
        raise ValueError(f"pattern: {pattern!r} not one of {PATTERNS}")
    p = np.arange(patch_w * patch_h)
    rows, cols = p // patch_w, p % patch_w
    if pattern == "MONO":
        return np.ones(p.size, dtype=np.intp)
    table = np.asarray(BAYER_LAYOUTS[pattern])
    return table[rows % 2, cols % 2]


def strike_columns(rgb_matrix: np.ndarray, patch_w: int, patch_h: int, pattern: str) -> np.ndarray:
    """Drop the RGB-matrix columns with no counterpart in the mosaiced patch.

    For every RGB patch x: reduced @ mosaic(x) == rgb_matrix @ zero_masked(x),
    where zero_masked zeroes the two unsampled channels at each pixel.
    """
    rgb = np.asarray(rgb_matrix, dtype=np.float64)
    n_pix = patch_w * patch_h
    if rgb.ndim != 2 or rgb.shape[1] != 3 * n_pix:
        raise ValueError(
            f"rgb matrix: expected (M, {3 * n_pix}) for a {patch_w}x{patch_h} patch, got {rgb.shape}"
        )
    ch = bayer_channel_of_pixel(patch_w, patch_h, pattern)
    cols = 3 * np.arange(n_pix) + ch
    return rgb[:, cols]


def _flatten_patch(pixels: np.ndarray, bank: WeightBank) -> np.ndarray:
    p = np.asarray(pixels, dtype=np.float64).ravel()
    if p.size != bank.columns:
        raise ValueError(f"patch has {p.size} pixels but bank expects {bank.columns}")
    return p


def project_patch(
    pixels: np.ndarray,
    bank: WeightBank,
    profile: HardwareProfile,
    fidelity: Fidelity = Fidelity.IDEAL,
    sum_mode: SumMode | None = None,
    frame: int = 0,
    patch_index: int = 0,
    valid: np.ndarray | None = None,
) -> np.ndarray:
    """Analog linear projection of one patch: v_r + sum(w * p) / n_pixels per vector.

    IDEAL computes the sum in real arithmetic.  ANALOG charges one cap per
    pixel through the PWM multiplier and shares the charge per vector,
    resetting between vectors, so quantization, noise and droop all apply.
    """
    if valid is not None and not np.all(valid):
        raise ValueError("project_patch: patch contains invalid (dumped) pixels")
    p = _flatten_patch(pixels, bank)
    n = p.size
    if fidelity is Fidelity.IDEAL:
        return profile.v_r + bank.weights @ p / n
    mode = sum_mode if sum_mode is not None else SumMode.opamp()
    out = np.empty(bank.m)
    for v in range(bank.m):
        charges = pwm_multiply_block(p, bank.weights[v], profile, frame, patch_index, v)
        out[v] = profile.v_r + charge_share_sum(charges, mode, profile)
    return out


@dataclass(frozen=True)
class AnalogFeatureFrame:
    """Per-selected-patch output voltages, still in the analog domain."""

    patch_indices: np.ndarray  # (n_selected,), row-major patch order
    features: np.ndarray       # (n_selected, M) volts
    tiling: PatchTiling

    @property
    def n_selected(self) -> int:
        return len(self.patch_indices)

    @property
    def m(self) -> int:
        return self.features.shape[1] if self.features.ndim == 2 else 0


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def run_frame(
    arr: AnalogPixelArray,
    tiling: PatchTiling,
    bank: WeightBank,
    mask: SelectionMask,
    profile: HardwareProfile,
    fidelity: Fidelity = Fidelity.IDEAL,
    sum_mode: SumMode | None = None,
    frame_index: int = 0,
    workers: int | None = None,
) -> AnalogFeatureFrame:
    """Project every selected patch of a frame.

    Patches are independent; with workers > 1 they run on a thread pool.
    Noise streams are keyed by (frame, patch, vector), so the result is
    bit-identical for any schedule.
    """
    if mask.tiling is not tiling and mask.tiling != tiling:
        raise ValueError("selection mask was built for a different tiling")
    if (tiling.sensor_w, tiling.sensor_h) != (arr.width, arr.height):
        raise ValueError(
            f"tiling covers {tiling.sensor_w}x{tiling.sensor_h} but frame is {arr.width}x{arr.height}"
        )
    if tiling.pixels_per_patch != bank.columns:
        raise ValueError(
            f"bank expects {bank.columns} pixels per patch, tiling has {tiling.pixels_per_patch}"
        )
    selected = np.flatnonzero(mask.selected)

    def one(i: int) -> np.ndarray:
        sl = tiling.slices(int(i))
        return project_patch(
            arr.voltages[sl],
            bank,
            profile,
            fidelity,
            sum_mode,
            frame=frame_index,
            patch_index=int(i),
            valid=arr.valid[sl],
        )

    n_workers = _worker_count(workers)
    if n_workers > 1 and len(selected) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(one, selected))
    else:
        rows = [one(i) for i in selected]
    features = np.vstack(rows) if rows else np.empty((0, bank.m))
    return AnalogFeatureFrame(selected.astype(np.intp), features, tiling)


@dataclass(frozen=True)
class Neighborhood:
    """One attention output: the patches it pools and their coefficients."""

    patch_index: int
    members: tuple
    coeffs: tuple

    def __post_init__(self):
        if len(self.members) != len(self.coeffs):
            raise ValueError("neighborhood members and coeffs must have equal length")
        if not self.members:
            raise ValueError("neighborhood must reference at least one patch")


def attention_layer(
    features: AnalogFeatureFrame,
    neighborhoods,
    profile: HardwareProfile,
    fidelity: Fidelity = Fidelity.IDEAL,
    sum_mode: SumMode | None = None,
) -> AnalogFeatureFrame:
    """Second compute layer: charge-share mean of power-of-2-scaled neighbors.

    Coefficients pass through the power-of-2 quantizer first, so each
    multiply is a shift in hardware.  The storage stage reuses the same
    charge-sharing machinery as the projection layer (droop included in
    ANALOG mode); there is no photo sensor in this layer.
    """
    mode = sum_mode if sum_mode is not None else SumMode.opamp()
    row_of = {int(p): r for r, p in enumerate(features.patch_indices)}
    out_indices = []
    out_rows = []
    for nb in neighborhoods:
        try:
            member_rows = [row_of[int(p)] for p in nb.members]
        except KeyError as exc:
            raise ValueError(f"neighborhood references missing patch {exc.args[0]}") from None
        q = np.array([qth_quantize(a) for a in nb.coeffs])
        scaled = q[:, None] * features.features[member_rows]
        if fidelity is Fidelity.IDEAL:
            row = scaled.mean(axis=0)
        else:
            row = scaled.mean(axis=0) * mode.droop_factor(profile)
        out_indices.append(int(nb.patch_index))
        out_rows.append(row)
    out = np.vstack(out_rows) if out_rows else np.empty((0, features.m))
    return AnalogFeatureFrame(np.asarray(out_indices, dtype=np.intp), out, features.tiling)
