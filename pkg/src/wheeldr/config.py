"""Run configuration and flat key=value config parsing."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .ekf import ProcessNoiseConfig
from .io import ConfigError, read_config_file
from .mechanization import GRAVITY
from .measurements import MODEL_KINDS, MeasurementConfig, WheelGeometry


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run depends on besides the input files."""

    model: str = "velocity"
    imu_rate: float = 200.0
    update_rate: float = 2.0
    cov_rate: float = 20.0  # covariance propagation cadence
    gravity: float = GRAVITY
    seed: int = 0

    wheel_radius: float = 0.3
    lever_arm: tuple[float, float, float] = (0.0, 0.01, 0.02)
    forward_sign: float = -1.0

    # Filter process noise, datasheet units (deg/h, deg/sqrt(h), m/s^2, m/s/sqrt(h), ppm).
    gyro_bias_dph: float = 200.0
    arw_dpsh: float = 0.24
    accel_bias: float = 0.01
    vrw_mpspsh: float = 3.0
    scale_ppm: float = 1000.0
    corr_time: float = 3600.0

    # Measurement noise (velocity m/s, displacement m per interval, contact m/s).
    vel_noise: float = 0.05
    disp_noise: float = 0.025
    contact_noise: float = 0.05

    static_window: float = 8.0  # s of data used for static alignment
    eq18: bool = False  # half-interval correction of the displacement Jacobian
    gate: bool = True  # innovation gating
    gate_threshold: float = 25.0
    lever_arm_error: tuple[float, float] = (0.0, 0.0)  # dy, dz on the estimator side
    time_offset: float = 0.0  # constant offset added to reference timestamps
    divergence_ceiling: float = 100.0  # m, 1-sigma horizontal position

    # Optional perturbation of the reference-derived initial state.
    init_pos_error: tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_vel_error: tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_heading_error_deg: float = 0.0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.imu_rate <= 0 or self.update_rate <= 0 or self.cov_rate <= 0:
            raise ConfigError("rates must be positive")
        for outer, inner, name in (
            (self.imu_rate, self.update_rate, "update_rate"),
            (self.imu_rate, self.cov_rate, "cov_rate"),
        ):
            if abs(outer / inner - round(outer / inner)) > 1e-9:
                raise ConfigError(f"{name} must divide imu_rate")

    @property
    def geometry(self) -> WheelGeometry:
        return WheelGeometry(
            self.wheel_radius, np.asarray(self.lever_arm), self.forward_sign
        )

    @property
    def estimator_geometry(self) -> WheelGeometry:
        """Geometry as believed by the filter (lever-arm error injected)."""
        dy, dz = self.lever_arm_error
        g = self.geometry
        return WheelGeometry(
            g.radius, g.lever_arm + np.array([0.0, dy, dz]), g.forward_sign
        )

    @property
    def process_noise(self) -> ProcessNoiseConfig:
        return ProcessNoiseConfig.from_spec_units(
            self.gyro_bias_dph,
            self.arw_dpsh,
            self.accel_bias,
            self.vrw_mpspsh,
            self.scale_ppm,
            self.corr_time,
        )

    @property
    def measurement(self) -> MeasurementConfig:
        return MeasurementConfig(
            kind=self.model,
            update_rate=self.update_rate,
            vel_noise_std=np.full(3, self.vel_noise),
            disp_noise_std=np.full(3, self.disp_noise),
            contact_noise_std=np.full(3, self.contact_noise),
            half_interval_correction=self.eq18,
            gate_threshold=self.gate_threshold if self.gate else None,
        )

    def snapshot(self) -> str:
        """Config as a sorted key=value block (for run records)."""
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(f"{x:.9g}" for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = f"{v:.9g}"
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_BOOL_VALUES = {"true": True, "1": True, "false": False, "0": False}


def _parse_value(name: str, text: str, example):
    if isinstance(example, bool):
        try:
            return _BOOL_VALUES[text.lower()]
        except KeyError:
            raise ConfigError(f"{name}: expected true/false, got {text!r}") from None
    if isinstance(example, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{name}: expected integer, got {text!r}") from None
    if isinstance(example, float):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{name}: expected number, got {text!r}") from None
    if isinstance(example, tuple):
        parts = text.split(",")
        if len(parts) != len(example):
            raise ConfigError(f"{name}: expected {len(example)} comma-separated values")
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{name}: expected numbers, got {text!r}") from None
    return text


def config_from_entries(entries: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    """Apply key=value entries onto a base config; unknown keys are errors."""
    base = base or RunConfig()
    known = {f.name: getattr(base, f.name) for f in fields(base)}
    updates = {}
    for key, value in entries.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _parse_value(key, value, known[key])
    return replace(base, **updates)


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    return config_from_entries(read_config_file(path), base)
