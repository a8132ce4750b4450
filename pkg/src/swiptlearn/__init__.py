"""Learned constellations and detectors for joint wireless information and power transfer."""

__version__ = "0.1.0"

from .autoencoder import (
    Constellation,
    DegenerateConstellationError,
    TrainConfig,
    TrainedSystem,
    awgn_channel,
    composite_loss,
    encode_all,
    estimate_ser,
    load_system,
    save_system,
    train,
)
from .bessel import QuadratureSpec, bessel_i0, bessel_i1, time_average_exponential
from .config import ConfigError
from .experiment import (
    ShapeReport,
    SweepConfig,
    SweepError,
    SweepRecord,
    best_record_per_lambda,
    binned_best_power,
    classify_shape,
    rate_power_curve,
    run_sweep,
)
from .nn import (
    AdamState,
    DenseLayer,
    Mlp,
    TrainingError,
    adam_step,
    backward,
    cross_entropy,
    forward,
    glorot_mlp,
    softmax,
)
from .rectenna import (
    RectennaParams,
    delivered_power_metric,
    delivered_power_metric_gradient,
    invert_power_threshold,
    power_threshold,
)

__all__ = [
    "AdamState",
    "Constellation",
    "ConfigError",
    "DegenerateConstellationError",
    "DenseLayer",
    "Mlp",
    "QuadratureSpec",
    "RectennaParams",
    "ShapeReport",
    "SweepConfig",
    "SweepError",
    "SweepRecord",
    "TrainConfig",
    "TrainedSystem",
    "TrainingError",
    "adam_step",
    "awgn_channel",
    "backward",
    "bessel_i0",
    "bessel_i1",
    "best_record_per_lambda",
    "binned_best_power",
    "classify_shape",
    "composite_loss",
    "cross_entropy",
    "delivered_power_metric",
    "delivered_power_metric_gradient",
    "encode_all",
    "estimate_ser",
    "forward",
    "glorot_mlp",
    "invert_power_threshold",
    "load_system",
    "power_threshold",
    "rate_power_curve",
    "run_sweep",
    "save_system",
    "softmax",
    "time_average_exponential",
    "train",
]
