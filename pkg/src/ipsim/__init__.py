"""In-pixel switched-capacitor compute simulator.

Behavioral models of a patch-based analog feature extractor living inside
an image sensor: photons in, digitized patch feature vectors out, plus
closed-form throughput/power/area models of the same architecture.
"""

from .analog import (
    ActivationKind,
    CapCharge,
    HardwareProfile,
    SumMode,
    SumVariant,
    activation,
    charge_share_sum,
    pwm_multiply,
    pwm_multiply_block,
    qth_quantize,
    qth_quantize_array,
    quantized_divide,
    series_combine,
)
from .estimators import AdcReadout, BayerMosaic, GaussianAntialias, PatchProjector, ShutterExposure
from .frontend import (
    AnalogPixelArray,
    BayerFrame,
    ExposureConfig,
    cds_sample,
    charge_dump,
    expose,
    gaussian_antialias,
    gaussian_kernel,
    mosaic_bayer,
)
from .geometry import PatchTiling, SelectionMask, build_tiling
from .patches import (
    AnalogFeatureFrame,
    Fidelity,
    Neighborhood,
    WeightBank,
    attention_layer,
    project_patch,
    run_frame,
    strike_columns,
)
from .perf import (
    AreaRow,
    PerfReport,
    PowerConfig,
    TimingConfig,
    area_estimate,
    build_report,
    compute_time,
    data_reduction,
    default_area_table,
    frame_time,
    power_estimate,
    readout_time,
    throughput,
)
from .pipeline import error_stats, oracle_frame, simulate_frame
from .readout import AdcConfig, DigitalFeatureFrame, adc_convert, assemble_features, digital_out

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "AdcConfig",
    "AdcReadout",
    "AnalogFeatureFrame",
    "AnalogPixelArray",
    "AreaRow",
    "BayerFrame",
    "BayerMosaic",
    "CapCharge",
    "DigitalFeatureFrame",
    "ExposureConfig",
    "Fidelity",
    "GaussianAntialias",
    "HardwareProfile",
    "Neighborhood",
    "PatchProjector",
    "PatchTiling",
    "PerfReport",
    "PowerConfig",
    "SelectionMask",
    "ShutterExposure",
    "SumMode",
    "SumVariant",
    "TimingConfig",
    "WeightBank",
    "activation",
    "adc_convert",
    "area_estimate",
    "assemble_features",
    "attention_layer",
    "build_report",
    "build_tiling",
    "cds_sample",
    "charge_dump",
    "charge_share_sum",
    "compute_time",
    "data_reduction",
    "default_area_table",
    "digital_out",
    "error_stats",
    "expose",
    "frame_time",
    "gaussian_antialias",
    "gaussian_kernel",
    "mosaic_bayer",
    "oracle_frame",
    "power_estimate",
    "project_patch",
    "pwm_multiply",
    "pwm_multiply_block",
    "qth_quantize",
    "qth_quantize_array",
    "quantized_divide",
    "readout_time",
    "run_frame",
    "series_combine",
    "simulate_frame",
    "strike_columns",
    "throughput",
]
