"""21-state closed-loop error-state Kalman filter.

State ordering: position error, velocity error, attitude error (phi-angle),
gyro bias, accel bias, gyro scale, accel scale; three components each. The
attitude convention is estimate = (I - skew(phi)) @ truth, with corrections
fed back after every measurement update so the error state is always zero
between updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import skew, orthonormalize
from .mechanization import ImuSample, NavState, SensorErrors

# State vector block offsets.
POS = 0
VEL = 3
ATT = 6
BG = 9
BA = 12
SG = 15
SA = 18
DIM = 21

DEG_PER_HOUR = math.pi / 180.0 / 3600.0  # rad/s per deg/h
DEG_PER_SQRT_HOUR = math.pi / 180.0 / 60.0  # rad/sqrt(s) per deg/sqrt(h)
PER_SQRT_HOUR = 1.0 / 60.0  # 1/sqrt(s) per 1/sqrt(h)


class SingularInnovationError(np.linalg.LinAlgError):
    """The innovation covariance H P H' + R is numerically singular."""


@dataclass(frozen=True)
class GaussMarkovParams:
    """First-order Gauss-Markov model: correlation time and steady-state sigma."""

    corr_time: float
    sigma: float

    def __post_init__(self):
        if self.corr_time <= 0.0:
            raise ValueError("correlation time must be positive")
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")

    @property
    def psd(self) -> float:
        """Driving-noise PSD giving the steady-state variance sigma^2."""
        return 2.0 * self.sigma**2 / self.corr_time


@dataclass(frozen=True)
class ProcessNoiseConfig:
    """White-noise densities (SI units) and Gauss-Markov models for the sensor states."""

    arw: float  # rad/sqrt(s)
    vrw: float  # m/s/sqrt(s)
    gyro_bias: GaussMarkovParams
    accel_bias: GaussMarkovParams
    gyro_scale: GaussMarkovParams
    accel_scale: GaussMarkovParams

    @classmethod
    def from_spec_units(
        cls,
        gyro_bias_dph: float,
        arw_dpsh: float,
        accel_bias: float,
        vrw_mpspsh: float,
        scale_ppm: float = 1000.0,
        corr_time: float = 3600.0,
    ) -> "ProcessNoiseConfig":
        """Build from datasheet units: deg/h, deg/sqrt(h), m/s^2, m/s/sqrt(h), ppm."""
        return cls(
            arw=arw_dpsh * DEG_PER_SQRT_HOUR,
            vrw=vrw_mpspsh * PER_SQRT_HOUR,
            gyro_bias=GaussMarkovParams(corr_time, gyro_bias_dph * DEG_PER_HOUR),
            accel_bias=GaussMarkovParams(corr_time, accel_bias),
            gyro_scale=GaussMarkovParams(corr_time, scale_ppm * 1e-6),
            accel_scale=GaussMarkovParams(corr_time, scale_ppm * 1e-6),
        )


def continuous_dynamics(nav: NavState, imu: ImuSample, cfg: ProcessNoiseConfig):
    """Continuous-time error dynamics F and mapped noise PSD G Q G'.

    The IMU sample must already be compensated. Sensor errors enter the
    velocity and attitude rows through bias plus diag(measurement) * scale.
    """
    c = nav.dcm
    f = imu.accel
    w = imu.gyro

    F = np.zeros((DIM, DIM))
    F[POS : POS + 3, VEL : VEL + 3] = np.eye(3)
    F[VEL : VEL + 3, ATT : ATT + 3] = skew(c @ f)
    F[VEL : VEL + 3, BA : BA + 3] = c
    F[VEL : VEL + 3, SA : SA + 3] = c * f  # C @ diag(f)
    F[ATT : ATT + 3, BG : BG + 3] = -c
    F[ATT : ATT + 3, SG : SG + 3] = -c * w  # -C @ diag(w)
    for idx, gm in (
        (BG, cfg.gyro_bias),
        (BA, cfg.accel_bias),
        (SG, cfg.gyro_scale),
        (SA, cfg.accel_scale),
    ):
        F[idx : idx + 3, idx : idx + 3] = -np.eye(3) / gm.corr_time

    q = np.zeros(DIM)
    q[VEL : VEL + 3] = cfg.vrw**2
    q[ATT : ATT + 3] = cfg.arw**2
    q[BG : BG + 3] = cfg.gyro_bias.psd
    q[BA : BA + 3] = cfg.accel_bias.psd
    q[SG : SG + 3] = cfg.gyro_scale.psd
    q[SA : SA + 3] = cfg.accel_scale.psd
    return F, np.diag(q)


def discretize(F: np.ndarray, gqg: np.ndarray, dt: float):
    """First-order transition matrix and trapezoidal process noise."""
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1] s, got {dt}")
    phi = np.eye(DIM) + F * dt
    qd = 0.5 * dt * (phi @ gqg @ phi.T + gqg)
    return phi, 0.5 * (qd + qd.T)


def predict(P: np.ndarray, phi: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """Covariance time update, symmetrized."""
    P = phi @ P @ phi.T + qd
    return 0.5 * (P + P.T)


def update(P: np.ndarray, z: np.ndarray, H: np.ndarray, R: np.ndarray):
    """Measurement update with Joseph-form covariance; returns (dx, P)."""
    S = H @ P @ H.T + R
    if np.linalg.cond(S) > 1e12:
        raise SingularInnovationError("innovation covariance is singular")
    K = np.linalg.solve(S.T, H @ P.T).T  # P H' S^-1
    dx = K @ z
    IKH = np.eye(DIM) - K @ H
    P = IKH @ P @ IKH.T + K @ R @ K.T
    return dx, 0.5 * (P + P.T)


def innovation_squared(P: np.ndarray, z: np.ndarray, H: np.ndarray, R: np.ndarray) -> float:
    """Normalized innovation squared z' S^-1 z (chi-square gating statistic)."""
    S = H @ P @ H.T + R
    return float(z @ np.linalg.solve(S, z))


def feedback(nav: NavState, sensors: SensorErrors, dx: np.ndarray):
    """Apply an estimated error vector to the navigation state and sensor errors.

    Closed-loop correction: position/velocity are shifted, the attitude is
    rotated by (I + skew(phi)) and re-orthonormalized, and bias/scale
    estimates are accumulated. The caller zeroes the error state by
    construction (dx is consumed).
    """
    phi = dx[ATT : ATT + 3]
    nav = NavState(
        nav.time,
        nav.pos - dx[POS : POS + 3],
        nav.vel - dx[VEL : VEL + 3],
        orthonormalize((np.eye(3) + skew(phi)) @ nav.dcm),
    )
    sensors = SensorErrors(
        sensors.gyro_bias + dx[BG : BG + 3],
        sensors.accel_bias + dx[BA : BA + 3],
        sensors.gyro_scale + dx[SG : SG + 3],
        sensors.accel_scale + dx[SA : SA + 3],
    )
    return nav, sensors


def initial_covariance(
    cfg: ProcessNoiseConfig,
    pos_std: float = 0.01,
    vel_std: float = 0.05,
    level_std_deg: float = 0.5,
    heading_std_deg: float = 1.0,
) -> np.ndarray:
    """Default prior covariance: small pose uncertainty, sensor states at 1-sigma."""
    d = np.zeros(DIM)
    d[POS : POS + 3] = pos_std**2
    d[VEL : VEL + 3] = vel_std**2
    d[ATT : ATT + 2] = math.radians(level_std_deg) ** 2
    d[ATT + 2] = math.radians(heading_std_deg) ** 2
    d[BG : BG + 3] = cfg.gyro_bias.sigma**2
    d[BA : BA + 3] = cfg.accel_bias.sigma**2
    d[SG : SG + 3] = cfg.gyro_scale.sigma**2
    d[SA : SA + 3] = cfg.accel_scale.sigma**2
    return np.diag(d)
