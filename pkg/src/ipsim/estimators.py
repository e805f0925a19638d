"""Scikit-learn compatible wrappers around the pipeline stages.

Each stage is a stateless transformer (fit derives layout information
from the input, transform does the work), so the whole signal path
composes with sklearn.pipeline.Pipeline and hyper-parameter tooling:

    Pipeline([
        ("aa", GaussianAntialias(cutoff_fraction=0.5)),
        ("cfa", BayerMosaic(pattern="RGGB")),
        ("expose", ShutterExposure(t_exposure=1e-3, gain=1e3)),
        ("project", PatchProjector(bank=bank, patch_w=8, patch_h=8)),
        ("adc", AdcReadout(bank=bank)),
    ])

Arrays in, arrays out: images are (H, W, 3), mosaics/voltages (H, W),
features (n_selected_patches, M).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .analog import HardwareProfile, SumMode
from .frontend import (
    AnalogPixelArray,
    BayerFrame,
    ExposureConfig,
    cds_sample,
    expose,
    gaussian_antialias,
    mosaic_bayer,
)
from .geometry import SelectionMask, build_tiling
from .patches import AnalogFeatureFrame, Fidelity, WeightBank, run_frame
from .readout import AdcConfig, assemble_features
from .validation import as_float_array


class GaussianAntialias(TransformerMixin, BaseEstimator):
    """Optical lowpass with -3dB at cutoff_fraction * Nyquist."""

    def __init__(self, cutoff_fraction=0.5):
        self.cutoff_fraction = cutoff_fraction

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return gaussian_antialias(X, self.cutoff_fraction)


class BayerMosaic(TransformerMixin, BaseEstimator):
    """Color-filter-array sampling; emits the raw (H, W) mosaic."""

    def __init__(self, pattern="RGGB"):
        self.pattern = pattern

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return mosaic_bayer(X, self.pattern).data


class ShutterExposure(TransformerMixin, BaseEstimator):
    """Global-shutter exposure plus CDS; emits held pixel voltages."""

    def __init__(self, t_exposure=1e-3, gain=1e3, v_dark=0.0, v_sat=1.0, fill_factor=1.0):
        self.t_exposure = t_exposure
        self.gain = gain
        self.v_dark = v_dark
        self.v_sat = v_sat
        self.fill_factor = fill_factor

    def _config(self) -> ExposureConfig:
        return ExposureConfig(self.t_exposure, self.gain, self.v_dark, self.v_sat, self.fill_factor)

    def fit(self, X, y=None):
        self._config()  # validate parameters
        return self

    def transform(self, X):
        cfg = self._config()
        frame = BayerFrame(as_float_array(X, "X", ndim=2), "MONO")
        reset = expose(BayerFrame(np.zeros_like(frame.data), frame.pattern), cfg)
        return cds_sample(expose(frame, cfg), reset, v_sat=cfg.v_sat).voltages


class PatchProjector(TransformerMixin, BaseEstimator):
    """Per-patch analog linear projection; emits (n_selected, M) voltages.

    fit() derives the patch tiling from the input frame shape (available
    afterwards as `tiling_`).  `mask` may be None (all patches), a boolean
    array per patch, or a float in (0, 1) selecting that fraction of
    patches by pixel variance.
    """

    def __init__(self, bank=None, patch_w=32, patch_h=32, origin_x=0, origin_y=0,
                 profile=None, fidelity="ideal", sum_mode=None, mask=None):
        self.bank = bank
        self.patch_w = patch_w
        self.patch_h = patch_h
        self.origin_x = origin_x
        self.origin_y = origin_y
        self.profile = profile
        self.fidelity = fidelity
        self.sum_mode = sum_mode
        self.mask = mask

    def fit(self, X, y=None):
        X = as_float_array(X, "X", ndim=2)
        if self.bank is None or not isinstance(self.bank, WeightBank):
            raise ValueError("PatchProjector requires a WeightBank via the `bank` parameter")
        self.tiling_ = build_tiling(
            X.shape[1], X.shape[0], self.patch_w, self.patch_h, self.origin_x, self.origin_y
        )
        self.n_patches_ = self.tiling_.n_patches
        return self

    def _mask(self, X) -> SelectionMask:
        if self.mask is None:
            return SelectionMask.full(self.tiling_)
        if np.isscalar(self.mask):
            return SelectionMask.top_variance(X, self.tiling_, float(self.mask))
        return SelectionMask(np.asarray(self.mask, dtype=bool), self.tiling_)

    def transform(self, X):
        if not hasattr(self, "tiling_"):
            self.fit(X)
        X = as_float_array(X, "X", ndim=2)
        profile = self.profile if self.profile is not None else HardwareProfile()
        sum_mode = self.sum_mode if self.sum_mode is not None else SumMode.opamp()
        arr = AnalogPixelArray(X, np.ones_like(X, dtype=bool))
        mask = self._mask(X)
        frame = run_frame(
            arr, self.tiling_, self.bank, mask, profile,
            Fidelity(self.fidelity), sum_mode,
        )
        self.patch_indices_ = frame.patch_indices
        return frame.features


class AdcReadout(TransformerMixin, BaseEstimator):
    """Edge ADC plus digital post-processing; emits final feature values."""

    def __init__(self, bank=None, bits=8, v_lo=0.0, v_hi=2.0, profile=None):
        self.bank = bank
        self.bits = bits
        self.v_lo = v_lo
        self.v_hi = v_hi
        self.profile = profile

    def fit(self, X, y=None):
        AdcConfig(self.bits, self.v_lo, self.v_hi)  # validate parameters
        return self

    def transform(self, X):
        if self.bank is None or not isinstance(self.bank, WeightBank):
            raise ValueError("AdcReadout requires a WeightBank via the `bank` parameter")
        X = as_float_array(X, "X", ndim=2)
        profile = self.profile if self.profile is not None else HardwareProfile()
        cfg = AdcConfig(self.bits, self.v_lo, self.v_hi)
        frame = AnalogFeatureFrame(np.arange(X.shape[0], dtype=np.intp), X, tiling=None)
        return assemble_features(frame, cfg, self.bank, profile).features
