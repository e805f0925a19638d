"""Unified run configuration for the CLI harness.

The config file is JSON with one section per subsystem; keys follow the
dataclass field names.  Missing keys fall back to the documented defaults
and every effective value is materialized into the run log, so a run is
reproducible from its log alone.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .analog import HardwareProfile, SumMode, SumVariant
from .frontend import PATTERNS, ExposureConfig
from .patches import Fidelity
from .perf import AreaRow, PowerConfig, TimingConfig, default_area_table
from .readout import AdcConfig
from .validation import check_choice


@dataclass(frozen=True)
class TilingParams:
    patch_w: int = 32
    patch_h: int = 32
    origin_x: int = 0
    origin_y: int = 0


@dataclass(frozen=True)
class FrontendParams:
    pattern: str = "RGGB"
    antialias_cutoff: float | None = 0.5  # None disables the optical lowpass
    read_noise_sigma: float = 0.0         # volts; optional Gaussian read noise

    def __post_init__(self):
        check_choice(self.pattern, PATTERNS, "pattern")
        if self.antialias_cutoff is not None and not 0.0 < self.antialias_cutoff <= 1.0:
            raise ValueError("antialias_cutoff must be in (0, 1] or null")
        if self.read_noise_sigma < 0:
            raise ValueError("read_noise_sigma must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    tiling: TilingParams = field(default_factory=TilingParams)
    exposure: ExposureConfig = field(default_factory=lambda: ExposureConfig(t_exposure=1e-3, gain=1e3))
    hardware: HardwareProfile = field(default_factory=HardwareProfile)
    adc: AdcConfig = field(default_factory=AdcConfig)
    sum_mode: SumMode = field(default_factory=SumMode.opamp)
    frontend: FrontendParams = field(default_factory=FrontendParams)
    timing: TimingConfig = field(default_factory=TimingConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    area: tuple = field(default_factory=lambda: tuple(default_area_table()))
    fidelity: Fidelity = Fidelity.IDEAL
    seed: int = 0
    mask_fraction: float = 0.25  # used by the variance-heuristic fallback mask

    def __post_init__(self):
        if not 0.0 <= self.mask_fraction <= 1.0:
            raise ValueError("mask_fraction must be in [0, 1]")

    def profile_with_seed(self) -> HardwareProfile:
        """Hardware profile with the run seed folded into the noise keying."""
        return dataclasses.replace(self.hardware, noise_seed=self.seed)


def _build(cls, section: dict, what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ValueError(f"config section {what!r}: unknown keys {sorted(unknown)}")
    return cls(**section)


def config_from_dict(raw: dict) -> RunConfig:
    raw = dict(raw)
    sections = {}
    for name, cls in (
        ("tiling", TilingParams),
        ("exposure", ExposureConfig),
        ("hardware", HardwareProfile),
        ("adc", AdcConfig),
        ("frontend", FrontendParams),
        ("timing", TimingConfig),
        ("power", PowerConfig),
    ):
        if name in raw:
            sections[name] = _build(cls, raw.pop(name), name)
    if "sum_mode" in raw:
        sm = raw.pop("sum_mode")
        sections["sum_mode"] = SumMode(SumVariant(sm.get("variant", "opamp").lower()),
                                       float(sm.get("hold_time", 0.0)))
    if "area" in raw:
        sections["area"] = tuple(AreaRow(str(r["name"]), float(r["count"]), float(r["unit_area"]))
                                 for r in raw.pop("area"))
    if "fidelity" in raw:
        sections["fidelity"] = Fidelity(str(raw.pop("fidelity")).lower())
    for key in ("seed", "mask_fraction"):
        if key in raw:
            sections[key] = raw.pop(key)
    if raw:
        raise ValueError(f"config: unknown top-level keys {sorted(raw)}")
    return RunConfig(**sections)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    """All effective values, defaults included (this is what the run log holds)."""

    def plain(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {k: plain(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, (list, tuple)):
            return [plain(v) for v in obj]
        if isinstance(obj, (Fidelity, SumVariant)):
            return obj.value
        return obj

    out = {
        "tiling": plain(cfg.tiling),
        "exposure": plain(cfg.exposure),
        "hardware": plain(cfg.hardware),
        "adc": plain(cfg.adc),
        "sum_mode": {"variant": cfg.sum_mode.variant.value, "hold_time": cfg.sum_mode.hold_time},
        "frontend": plain(cfg.frontend),
        "timing": plain(cfg.timing),
        "power": plain(cfg.power),
        "area": [{"name": r.name, "count": r.count, "unit_area": r.unit_area} for r in cfg.area],
        "fidelity": cfg.fidelity.value,
        "seed": cfg.seed,
        "mask_fraction": cfg.mask_fraction,
    }
    return out
