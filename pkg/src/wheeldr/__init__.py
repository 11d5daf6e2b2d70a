"""Dead reckoning with a wheel-mounted MEMS IMU.

Strapdown INS mechanization fused with three alternative wheel measurement
models (velocity, displacement increment, contact-point zero velocity)
through a 21-state error-state Kalman filter, plus a kinematically exact
simulator and a segmented drift-rate evaluation harness.
"""

from .config import RunConfig, load_config
from .ekf import ProcessNoiseConfig
from .evaluate import DriftReport, ErrorSeries, compare_models, drift_rate, heading_stats
from .measurements import MeasurementConfig, WheelGeometry
from .pipeline import RunRecord, run_pipeline
from .simulate import (
    ImuStream,
    SensorErrorSpec,
    Segment,
    TrajectoryProfile,
    TruthSequence,
    corrupt,
    generate_truth,
    inject_lever_arm_error,
    named_profile,
    synthesize_imu,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "load_config",
    "ProcessNoiseConfig",
    "DriftReport",
    "ErrorSeries",
    "compare_models",
    "drift_rate",
    "heading_stats",
    "MeasurementConfig",
    "WheelGeometry",
    "RunRecord",
    "run_pipeline",
    "ImuStream",
    "SensorErrorSpec",
    "Segment",
    "TrajectoryProfile",
    "TruthSequence",
    "corrupt",
    "generate_truth",
    "inject_lever_arm_error",
    "named_profile",
    "synthesize_imu",
    "__version__",
]
