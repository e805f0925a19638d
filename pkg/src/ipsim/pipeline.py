"""End-to-end frame processing used by the CLI harness.

Two paths share the frontend:

* ANALOG: PWM multiply + charge sharing + edge ADC, every non-ideality on.
* IDEAL: the pure-arithmetic reference (digital feature = bias + scale *
  (W @ P) / N^2, no quantization anywhere).  `oracle` and `simulate
  --fidelity ideal` both run this exact code path, which is what makes
  their outputs bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import noise
from .config import RunConfig
from .frontend import (
    AnalogPixelArray,
    BayerFrame,
    cds_sample,
    charge_dump,
    expose,
    gaussian_antialias,
    mosaic_bayer,
)
from .geometry import SelectionMask, build_tiling
from .patches import Fidelity, WeightBank, run_frame
from .readout import DigitalFeatureFrame, assemble_features

_READ_NOISE_STREAM = -1  # patch key reserved for frontend read noise


def frontend_voltages(cfg: RunConfig, img: np.ndarray, frame_index: int = 0) -> AnalogPixelArray:
    """Photons to held CDS voltages: antialias, mosaic, expose, CDS."""
    if cfg.frontend.antialias_cutoff is not None:
        img = gaussian_antialias(img, cfg.frontend.antialias_cutoff)
    frame = mosaic_bayer(img, cfg.frontend.pattern)
    signal = expose(frame, cfg.exposure)
    dark = BayerFrame(np.zeros_like(frame.data), frame.pattern)
    reset = expose(dark, cfg.exposure)
    held = cds_sample(signal, reset, v_sat=cfg.exposure.v_sat)
    if cfg.frontend.read_noise_sigma > 0.0:
        extra = noise.normal_block(
            held.voltages.size,
            cfg.frontend.read_noise_sigma,
            cfg.seed,
            frame_index,
            _READ_NOISE_STREAM,
        ).reshape(held.voltages.shape)
        held = AnalogPixelArray(
            np.clip(held.voltages + extra, 0.0, cfg.exposure.v_sat), held.valid
        )
    return held


def resolve_mask(cfg: RunConfig, arr: AnalogPixelArray, tiling, mask: SelectionMask | None) -> SelectionMask:
    """Use the supplied mask, or fall back to the variance heuristic."""
    if mask is not None:
        return mask
    return SelectionMask.top_variance(arr.voltages, tiling, cfg.mask_fraction)


def _ideal_digital(arr: AnalogPixelArray, tiling, bank: WeightBank, mask: SelectionMask,
                   frame_index: int) -> DigitalFeatureFrame:
    selected = np.flatnonzero(mask.selected)
    feats = np.empty((len(selected), bank.m))
    n = tiling.pixels_per_patch
    for row, i in enumerate(selected):
        p = arr.voltages[tiling.slices(int(i))].ravel()
        feats[row] = bank.bias + bank.scale * (bank.weights @ p) / n
    return DigitalFeatureFrame(selected.astype(np.intp), feats, bank.m, frame_index=frame_index)


def simulate_frame(
    cfg: RunConfig,
    img: np.ndarray,
    bank: WeightBank,
    mask: SelectionMask | None = None,
    frame_index: int = 0,
    fidelity: Fidelity | None = None,
    workers: int | None = None,
) -> DigitalFeatureFrame:
    """Full pipeline for one frame, at the configured (or given) fidelity."""
    fidelity = fidelity if fidelity is not None else cfg.fidelity
    tiling = build_tiling(
        img.shape[1], img.shape[0],
        cfg.tiling.patch_w, cfg.tiling.patch_h,
        cfg.tiling.origin_x, cfg.tiling.origin_y,
    )
    if tiling.pixels_per_patch != bank.columns:
        raise ValueError(
            f"weight bank has {bank.columns} columns but patches have "
            f"{tiling.pixels_per_patch} pixels"
        )
    arr = frontend_voltages(cfg, img, frame_index)
    mask = resolve_mask(cfg, arr, tiling, mask)
    arr = charge_dump(arr, mask)
    if fidelity is Fidelity.IDEAL:
        return _ideal_digital(arr, tiling, bank, mask, frame_index)
    profile = cfg.profile_with_seed()
    analog = run_frame(
        arr, tiling, bank, mask, profile,
        Fidelity.ANALOG, cfg.sum_mode, frame_index=frame_index, workers=workers,
    )
    return assemble_features(analog, cfg.adc, bank, profile, frame_index=frame_index)


def oracle_frame(
    cfg: RunConfig,
    img: np.ndarray,
    bank: WeightBank,
    mask: SelectionMask | None = None,
    frame_index: int = 0,
) -> DigitalFeatureFrame:
    """Ground-truth pipeline: identical to simulate_frame at IDEAL fidelity."""
    return simulate_frame(cfg, img, bank, mask, frame_index, fidelity=Fidelity.IDEAL)


@dataclass(frozen=True)
class ErrorStats:
    max_abs: float
    mean_abs: float
    rms: float
    enob: float


def error_stats(a: np.ndarray, b: np.ndarray, full_scale: float = 1.0) -> ErrorStats:
    """Error statistics between two feature sets of identical shape.

    The implied ENOB treats the RMS error as the quantization noise of an
    ideal uniform converter spanning `full_scale`.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return ErrorStats(0.0, 0.0, 0.0, math.inf)
    err = a - b
    rms = float(np.sqrt(np.mean(err ** 2)))
    enob = math.inf if rms == 0.0 else math.log2(full_scale / (rms * math.sqrt(12.0)))
    return ErrorStats(float(np.abs(err).max()), float(np.abs(err).mean()), rms, enob)
