"""Analytical throughput, power and area models for the in-pixel array.

These are closed-form models, independent of the signal-path simulator.
Timing and energy constants are calibration targets chosen so the stated
operating points of the architecture hold with margin; every one of them
is config-overridable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .validation import check_choice

WEIGHT_LINE_CHOICES = (1, 2, 4, 8)


@dataclass(frozen=True)
class TimingConfig:
    """Operating point for the frame-time model.

    m is the number of vectors per patch; c the number of weight voltage
    lines per pixel column (how many weight rows program concurrently).
    """

    sensor_w: int = 1920
    sensor_h: int = 1080
    patch_w: int = 32
    patch_h: int = 32
    m: int = 400
    c: int = 2
    t_dac: float = 1.0e-6       # seconds per weight-programming step
    t_pwm: float = 0.7e-6       # seconds per PWM integration
    t_exposure: float = 1.0e-3  # seconds, overlaps processing
    n_adc: int = 32
    f_adc: float = 50e6         # conversions/second per ADC
    active_fraction: float = 0.25
    pipelined: bool = True      # False serializes compute and readout

    def __post_init__(self):
        check_choice(self.c, WEIGHT_LINE_CHOICES, "c (weight lines per column)")
        for name in ("t_dac", "t_pwm", "t_exposure", "f_adc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"TimingConfig: {name} must be > 0")
        if self.m < 1 or self.n_adc < 1:
            raise ValueError("TimingConfig: m and n_adc must be >= 1")
        if not 0.0 <= self.active_fraction <= 1.0:
            raise ValueError("TimingConfig: active_fraction must be in [0, 1]")

    @property
    def patch_count(self) -> int:
        return (self.sensor_w // self.patch_w) * (self.sensor_h // self.patch_h)


@dataclass(frozen=True)
class PowerConfig:
    """Per-event energies and static terms for the power breakdown."""

    e_adc: float = 5e-9       # joules per conversion (dominant by design)
    e_dac: float = 1e-12      # joules per weight-line write
    c_unit: float = 30e-15    # farads, per-pixel storage cap
    v_drive: float = 0.4      # volts, representative cap charging swing
    p_opamp: float = 0.5e-6   # watts static per patch amplifier
    p_misc: float = 5e-3      # watts fixed overhead
    frame_rate: float | None = None  # override; None derives it from timing

    def __post_init__(self):
        for name in ("e_adc", "e_dac", "c_unit", "v_drive", "p_opamp", "p_misc"):
            if getattr(self, name) < 0:
                raise ValueError(f"PowerConfig: {name} must be >= 0")


@dataclass(frozen=True)
class AreaRow:
    name: str
    count: float
    unit_area: float  # um^2

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"AreaRow {self.name}: count must be >= 0")
        if self.unit_area <= 0:
            raise ValueError(f"AreaRow {self.name}: unit area must be > 0")

    @property
    def total(self) -> float:
        return self.count * self.unit_area


def default_area_table() -> list[AreaRow]:
    """Conservative 65 nm per-pixel budget: 22 um pitch, caps and FETs dominate."""
    return [
        AreaRow("photo_sensor", 1, 64.0),
        AreaRow("cap_30ff", 3, 64.0),
        AreaRow("transistors", 41, 5.0),
        AreaRow("wiring", 1, 16.0),
        AreaRow("margin", 1, 8.0),
    ]


def compute_time(cfg: TimingConfig) -> float:
    """Time to program and integrate all M vectors.

    Weights broadcast on the column lines, so every patch computes
    concurrently and the count of patches does not appear: per vector,
    ceil(patch_h / c) program+integrate steps.
    """
    steps = math.ceil(cfg.patch_h / cfg.c)
    return cfg.m * steps * (cfg.t_dac + cfg.t_pwm)


def readout_time(cfg: TimingConfig) -> float:
    """Time to digitize the selected patches' features through the edge ADCs."""
    conversions = cfg.patch_count * cfg.active_fraction * cfg.m
    return conversions / (cfg.n_adc * cfg.f_adc)


def frame_time(cfg: TimingConfig) -> float:
    """Frame period: exposure always overlaps processing; compute and
    readout overlap too unless pipelining is disabled."""
    t_c, t_r = compute_time(cfg), readout_time(cfg)
    processing = max(t_c, t_r) if cfg.pipelined else t_c + t_r
    return max(processing, cfg.t_exposure)


def throughput(cfg: TimingConfig) -> tuple[float, float]:
    """(frame_rate Hz, pixel throughput in Mpix/s)."""
    rate = 1.0 / frame_time(cfg)
    return rate, cfg.sensor_w * cfg.sensor_h * rate / 1e6


@dataclass(frozen=True)
class PowerBreakdown:
    """Component powers in watts."""

    adc: float
    dac: float
    analog: float
    opamp: float
    misc: float

    @property
    def total(self) -> float:
        return self.adc + self.dac + self.analog + self.opamp + self.misc

    def as_mw_dict(self) -> dict:
        to_mw = lambda w: w * 1e3  # noqa: E731
        return {
            "adc": to_mw(self.adc),
            "dac": to_mw(self.dac),
            "analog": to_mw(self.analog),
            "opamp": to_mw(self.opamp),
            "misc": to_mw(self.misc),
            "total": to_mw(self.total),
        }


def power_estimate(tcfg: TimingConfig, pcfg: PowerConfig, frame_rate: float | None = None) -> PowerBreakdown:
    """Power at the given capture rate (defaults to the achievable rate).

    ADC energy scales with digitized features, DAC energy with weight-line
    writes (one per pixel column per programmed row), analog energy with
    cap charging events on active patches; the patch amplifiers and fixed
    overhead are static.
    """
    if frame_rate is None:
        frame_rate = pcfg.frame_rate
    if frame_rate is None:
        frame_rate = 1.0 / frame_time(tcfg)
    conversions = tcfg.patch_count * tcfg.active_fraction * tcfg.m * frame_rate
    weight_writes = tcfg.m * tcfg.patch_h * tcfg.sensor_w * frame_rate
    active_pixels = tcfg.patch_count * tcfg.patch_w * tcfg.patch_h * tcfg.active_fraction
    charge_events = active_pixels * tcfg.m * frame_rate
    return PowerBreakdown(
        adc=conversions * pcfg.e_adc,
        dac=weight_writes * pcfg.e_dac,
        analog=charge_events * 0.5 * pcfg.c_unit * pcfg.v_drive ** 2,
        opamp=tcfg.patch_count * pcfg.p_opamp,
        misc=pcfg.p_misc,
    )


@dataclass(frozen=True)
class AreaEstimate:
    total: float            # um^2
    pitch: float            # um
    occupancy: dict = field(default_factory=dict)  # row name -> fraction


def area_estimate(table) -> AreaEstimate:
    rows = list(table)
    if not rows:
        raise ValueError("area_estimate: empty table")
    total = sum(r.total for r in rows)
    return AreaEstimate(
        total=total,
        pitch=math.sqrt(total),
        occupancy={r.name: r.total / total for r in rows},
    )


def data_reduction(patch_w: int, patch_h: int, m: int, active_fraction: float) -> tuple[float, float]:
    """(reduction vs raw Bayer, reduction vs interpolated RGB).

    Bayer-to-RGB interpolation is folded into the projection, so the RGB
    comparison gains the extra factor of 3.
    """
    if patch_w <= 0 or patch_h <= 0 or m <= 0 or active_fraction <= 0:
        raise ValueError("data_reduction: all arguments must be > 0")
    vs_bayer = (patch_w * patch_h) / (m * active_fraction)
    return vs_bayer, 3.0 * vs_bayer


@dataclass(frozen=True)
class PerfReport:
    frame_time_s: float
    frame_rate_hz: float
    mpix_per_s: float
    power: PowerBreakdown
    pitch_um: float
    reduction_bayer: float
    reduction_rgb: float

    def to_json_dict(self) -> dict:
        return {
            "frame_time_s": self.frame_time_s,
            "frame_rate_hz": self.frame_rate_hz,
            "mpix_per_s": self.mpix_per_s,
            "power_mw": self.power.as_mw_dict(),
            "pitch_um": self.pitch_um,
            "reduction": {"bayer": self.reduction_bayer, "rgb": self.reduction_rgb},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        p = self.power.as_mw_dict()
        lines = [
            f"frame time        {self.frame_time_s * 1e3:10.4f} ms",
            f"frame rate        {self.frame_rate_hz:10.2f} Hz",
            f"pixel throughput  {self.mpix_per_s:10.2f} Mpix/s",
            "power breakdown (mW)",
        ]
        for key in ("adc", "dac", "analog", "opamp", "misc", "total"):
            lines.append(f"  {key:<8}        {p[key]:10.3f}")
        lines += [
            f"pixel pitch       {self.pitch_um:10.2f} um",
            f"reduction vs Bayer{self.reduction_bayer:10.2f} x",
            f"reduction vs RGB  {self.reduction_rgb:10.2f} x",
        ]
        return "\n".join(lines)


def build_report(
    tcfg: TimingConfig,
    pcfg: PowerConfig,
    area_table=None,
) -> PerfReport:
    rate, mpix = throughput(tcfg)
    power = power_estimate(tcfg, pcfg)
    area = area_estimate(area_table if area_table is not None else default_area_table())
    vs_bayer, vs_rgb = data_reduction(tcfg.patch_w, tcfg.patch_h, tcfg.m, tcfg.active_fraction)
    return PerfReport(
        frame_time_s=frame_time(tcfg),
        frame_rate_hz=rate,
        mpix_per_s=mpix,
        power=power,
        pitch_um=area.pitch,
        reduction_bayer=vs_bayer,
        reduction_rgb=vs_rgb,
    )
