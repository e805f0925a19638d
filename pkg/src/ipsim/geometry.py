"""Patch tiling over the sensor and the per-patch selection mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALLOWED_PATCH_SIZES = (8, 16, 24, 32)
ORIGIN_STEP = 4


@dataclass(frozen=True)
class PatchTiling:
    """Non-overlapping grid of equal patches, fully inside the sensor.

    `patches` holds (x0, y0) upper-left corners in row-major order; that
    order defines patch indices everywhere (mask files, feature files).
    """

    sensor_w: int
    sensor_h: int
    patch_w: int
    patch_h: int
    origin_x: int
    origin_y: int
    patches: tuple

    @property
    def n_patches(self) -> int:
        return len(self.patches)

    @property
    def pixels_per_patch(self) -> int:
        return self.patch_w * self.patch_h

    def slices(self, index: int):
        """(row_slice, col_slice) of patch `index` into a sensor array."""
        x0, y0 = self.patches[index]
        return slice(y0, y0 + self.patch_h), slice(x0, x0 + self.patch_w)


def build_tiling(
    sensor_w: int,
    sensor_h: int,
    patch_w: int,
    patch_h: int,
    origin_x: int = 0,
    origin_y: int = 0,
) -> PatchTiling:
    """Grid the sensor into patches; partial patches at the edges are dropped."""
    if patch_w not in ALLOWED_PATCH_SIZES or patch_h not in ALLOWED_PATCH_SIZES:
        raise ValueError(
            f"patch size {patch_w}x{patch_h}: each side must be one of {ALLOWED_PATCH_SIZES}"
        )
    if origin_x < 0 or origin_y < 0 or origin_x % ORIGIN_STEP or origin_y % ORIGIN_STEP:
        raise ValueError(f"origin ({origin_x},{origin_y}): must be non-negative multiples of {ORIGIN_STEP}")
    if sensor_w < patch_w or sensor_h < patch_h:
        raise ValueError(f"sensor {sensor_w}x{sensor_h} smaller than patch {patch_w}x{patch_h}")
    nx = (sensor_w - origin_x) // patch_w
    ny = (sensor_h - origin_y) // patch_h
    patches = tuple(
        (origin_x + ix * patch_w, origin_y + iy * patch_h)
        for iy in range(ny)
        for ix in range(nx)
    )
    return PatchTiling(sensor_w, sensor_h, patch_w, patch_h, origin_x, origin_y, patches)


@dataclass(frozen=True)
class SelectionMask:
    """Per-patch saliency bits, aligned with a tiling's patch order."""

    selected: np.ndarray  # bool, one entry per patch
    tiling: PatchTiling

    def __post_init__(self):
        sel = np.asarray(self.selected, dtype=bool)
        object.__setattr__(self, "selected", sel)
        if sel.ndim != 1 or sel.size != self.tiling.n_patches:
            raise ValueError(
                f"selection mask length {sel.size} does not match patch count {self.tiling.n_patches}"
            )

    @property
    def active_fraction(self) -> float:
        return float(self.selected.mean()) if self.selected.size else 0.0

    @classmethod
    def full(cls, tiling: PatchTiling) -> "SelectionMask":
        return cls(np.ones(tiling.n_patches, dtype=bool), tiling)

    @classmethod
    def none(cls, tiling: PatchTiling) -> "SelectionMask":
        return cls(np.zeros(tiling.n_patches, dtype=bool), tiling)

    @classmethod
    def top_variance(cls, voltages: np.ndarray, tiling: PatchTiling, fraction: float) -> "SelectionMask":
        """Demo fallback: select the top `fraction` of patches by pixel variance.

        Real deployments ingest the mask from the backend predictor; this
        heuristic only keeps the simulator self-contained.
        """
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"fraction: {fraction!r} outside [0, 1]")
        var = np.array([np.var(voltages[tiling.slices(i)]) for i in range(tiling.n_patches)])
        k = int(round(fraction * tiling.n_patches))
        sel = np.zeros(tiling.n_patches, dtype=bool)
        if k > 0:
            # Stable tie-break on patch index keeps the mask deterministic.
            order = np.lexsort((np.arange(var.size), -var))
            sel[order[:k]] = True
        return cls(sel, tiling)
