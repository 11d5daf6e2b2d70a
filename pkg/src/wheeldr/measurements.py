"""Wheel-IMU measurement models for the error-state filter.

Three interchangeable observations built from the same information (the wheel
velocity sensed by the axis gyro):

* velocity: wheel-center velocity in the vehicle frame with the lateral and
  vertical components pinned to zero (non-holonomic constraint);
* displacement: the heading-projected displacement increment accumulated over
  the update interval;
* contact: zero velocity of the wheel-ground contact point.

Each model returns an Innovation (residual z = predicted - observed, Jacobian
H against the 21-state error vector, and noise covariance R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ekf
from .geometry import (
    GimbalLockError,
    dcm_nav_to_vehicle,
    dcm_vehicle_to_nav,
    euler_from_dcm,
    skew,
    vehicle_heading_from_imu,
)
from .mechanization import ImuSample, NavState

VELOCITY = "velocity"
DISPLACEMENT = "displacement"
CONTACT = "contact"
MODEL_KINDS = (VELOCITY, DISPLACEMENT, CONTACT)

_E3 = np.array([0.0, 0.0, 1.0])


class EmptyIntervalError(ValueError):
    """Displacement innovation requested before any epochs were accumulated."""


@dataclass(frozen=True)
class WheelGeometry:
    """Wheel radius, IMU-to-wheel-center lever arm (b-frame), and spin sign.

    forward_sign maps the axis gyro rate to a forward-positive wheel speed;
    with the body x-axis pointing to the right of the vehicle, forward rolling
    spins the wheel negatively about x, so the default is -1.
    """

    radius: float
    lever_arm: np.ndarray
    forward_sign: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "lever_arm", np.asarray(self.lever_arm, dtype=float))
        if self.radius <= 0.0:
            raise ValueError("wheel radius must be positive")
        if np.linalg.norm(self.lever_arm) >= self.radius:
            raise ValueError("lever arm must be shorter than the wheel radius")
        if self.forward_sign not in (-1.0, 1.0):
            raise ValueError("forward_sign must be +1 or -1")


@dataclass(frozen=True)
class MeasurementConfig:
    """Model selection, update rate, and per-model measurement noise."""

    kind: str = VELOCITY
    update_rate: float = 2.0
    vel_noise_std: np.ndarray = field(default_factory=lambda: np.full(3, 0.05))
    disp_noise_std: np.ndarray = field(default_factory=lambda: np.full(3, 0.025))
    contact_noise_std: np.ndarray = field(default_factory=lambda: np.full(3, 0.05))
    half_interval_correction: bool = False  # trapezoid refinement of the velocity integral
    gate_threshold: float | None = 25.0  # normalized innovation squared; None disables

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown measurement model {self.kind!r}")
        if self.update_rate <= 0.0:
            raise ValueError("update rate must be positive")
        for name in ("vel_noise_std", "disp_noise_std", "contact_noise_std"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)
            if not np.all(v > 0.0):
                raise ValueError(f"{name} must be positive")


@dataclass
class Innovation:
    z: np.ndarray
    H: np.ndarray
    R: np.ndarray


def wheel_speed(imu: ImuSample, g: WheelGeometry) -> float:
    """Forward wheel speed from the axis gyro of a compensated sample."""
    return g.forward_sign * imu.gyro[0] * g.radius


def velocity_obs_vframe(speed: float) -> np.ndarray:
    """Vehicle-frame velocity observation with the NHC zeros appended."""
    return np.array([speed, 0.0, 0.0])


def euler_error_jacobian(c: np.ndarray) -> np.ndarray:
    """Matrix T with (true - estimated) euler angles = T @ phi to first order.

    phi is the attitude error vector under estimate = (I - skew(phi)) @ truth.
    Row 0 routes the roll error and row 2 the heading error used by the
    measurement models.
    """
    ct = math.hypot(c[0, 0], c[1, 0])  # cos(pitch), non-negative by convention
    if ct < 1e-9:
        raise GimbalLockError("euler error Jacobian undefined at pitch = +/-90 deg")
    st = -c[2, 0]
    ch, sh = c[0, 0] / ct, c[1, 0] / ct
    tt = st / ct
    return np.array(
        [
            [ch / ct, sh / ct, 0.0],
            [-sh, ch, 0.0],
            [tt * ch, tt * sh, 1.0],
        ]
    )


def predicted_wheel_velocity(
    nav: NavState, imu: ImuSample, g: WheelGeometry, frame: str = "n"
) -> np.ndarray:
    """INS-indicated wheel-center velocity, lever arm applied, in n or v frame."""
    v = nav.vel + nav.dcm @ np.cross(imu.gyro, g.lever_arm)
    if frame == "n":
        return v
    if frame == "v":
        psi_v = vehicle_heading_from_imu(euler_from_dcm(nav.dcm).heading)
        return dcm_nav_to_vehicle(psi_v) @ v
    raise ValueError(f"frame must be 'n' or 'v', got {frame!r}")


def _heading_outer(col: np.ndarray, t_heading: np.ndarray) -> np.ndarray:
    """3x21 block routing a heading-error-proportional column onto phi."""
    h = np.zeros((3, ekf.DIM))
    h[:, ekf.ATT : ekf.ATT + 3] = np.outer(col, t_heading)
    return h


def velocity_innovation(
    nav: NavState, imu: ImuSample, g: WheelGeometry, cfg: MeasurementConfig
) -> Innovation:
    """Vehicle-frame wheel velocity residual and its Jacobian."""
    c = nav.dcm
    w = imu.gyro
    t = euler_error_jacobian(c)
    psi_v = vehicle_heading_from_imu(euler_from_dcm(c).heading)
    cnv = dcm_nav_to_vehicle(psi_v)

    lever_vel = c @ np.cross(w, g.lever_arm)
    v_wheel_n = nav.vel + lever_vel
    z = cnv @ v_wheel_n - velocity_obs_vframe(wheel_speed(imu, g))

    H = np.zeros((3, ekf.DIM))
    H[:, ekf.VEL : ekf.VEL + 3] = cnv
    # Attitude coupling through the rotated lever-arm velocity, plus the
    # vehicle-heading error entering through the n-to-v projection. The
    # heading error (true - estimated) is row 2 of the euler error Jacobian.
    H[:, ekf.ATT : ekf.ATT + 3] = cnv @ skew(lever_vel)
    H -= _heading_outer(cnv @ (skew(nav.vel) + skew(lever_vel)) @ _E3, t[2])
    gyro_block = -cnv @ c @ skew(g.lever_arm)
    H[:, ekf.BG : ekf.BG + 3] = gyro_block
    H[:, ekf.SG : ekf.SG + 3] = gyro_block * w
    return Innovation(z, H, np.diag(cfg.vel_noise_std**2))


def contact_lever_arm(g: WheelGeometry, roll: float):
    """Lever arm to the wheel-ground contact point at the given IMU roll angle.

    Returns the vector and its derivative with respect to roll.
    """
    offset = g.radius * np.array([0.0, math.sin(roll), math.cos(roll)])
    d_offset = g.radius * np.array([0.0, math.cos(roll), -math.sin(roll)])
    return g.lever_arm + offset, d_offset


def contact_innovation(
    nav: NavState, imu: ImuSample, g: WheelGeometry, cfg: MeasurementConfig
) -> Innovation:
    """Zero-velocity residual of the contact point and its Jacobian."""
    c = nav.dcm
    w = imu.gyro
    t = euler_error_jacobian(c)
    roll = euler_from_dcm(c).roll
    l_p, dl_droll = contact_lever_arm(g, roll)

    lever_vel = c @ np.cross(w, l_p)
    z = nav.vel + lever_vel  # observed contact velocity is zero

    H = np.zeros((3, ekf.DIM))
    H[:, ekf.VEL : ekf.VEL + 3] = np.eye(3)
    H[:, ekf.ATT : ekf.ATT + 3] = skew(lever_vel)
    # Roll error shifts the computed contact point around the rim; the roll
    # of the estimate moves by minus row 0 of the euler error Jacobian.
    H += _heading_outer(c @ np.cross(w, dl_droll), -t[0])
    gyro_block = -c @ skew(l_p)
    H[:, ekf.BG : ekf.BG + 3] = gyro_block
    H[:, ekf.SG : ekf.SG + 3] = gyro_block * w
    return Innovation(z, H, np.diag(cfg.contact_noise_std**2))


@dataclass
class DisplacementAccumulator:
    """Running displacement integrals for the increment measurement."""

    start_time: float = 0.0
    measured: np.ndarray = field(default_factory=lambda: np.zeros(3))
    predicted: np.ndarray = field(default_factory=lambda: np.zeros(3))
    duration: float = 0.0
    count: int = 0

    def reset(self, start_time: float) -> None:
        self.start_time = start_time
        self.measured[:] = 0.0
        self.predicted[:] = 0.0
        self.duration = 0.0
        self.count = 0


def accumulate_displacement(
    acc: DisplacementAccumulator,
    nav: NavState,
    imu: ImuSample,
    g: WheelGeometry,
    dt: float,
) -> DisplacementAccumulator:
    """Add one IMU epoch to the displacement integrals (rectangle rule).

    Runs once per IMU sample, so everything stays scalar; no array temporaries.
    """
    c = nav.dcm
    w = imu.gyro
    ct = math.hypot(c[0, 0], c[1, 0])
    if ct < 1e-9:
        raise GimbalLockError("vehicle heading undefined at pitch = +/-90 deg")
    # cos/sin of the vehicle heading (IMU heading minus a quarter turn).
    cv, sv = c[1, 0] / ct, -c[0, 0] / ct
    s = g.forward_sign * w[0] * g.radius
    lx, ly, lz = g.lever_arm
    wx, wy, wz = w
    rx = wy * lz - wz * ly
    ry = wz * lx - wx * lz
    rz = wx * ly - wy * lx
    v = nav.vel
    m = acc.measured
    p = acc.predicted
    m[0] += s * cv * dt
    m[1] += s * sv * dt
    p[0] += (v[0] + c[0, 0] * rx + c[0, 1] * ry + c[0, 2] * rz) * dt
    p[1] += (v[1] + c[1, 0] * rx + c[1, 1] * ry + c[1, 2] * rz) * dt
    p[2] += (v[2] + c[2, 0] * rx + c[2, 1] * ry + c[2, 2] * rz) * dt
    acc.duration += dt
    acc.count += 1
    return acc


def displacement_innovation(
    acc: DisplacementAccumulator,
    nav: NavState,
    imu: ImuSample,
    g: WheelGeometry,
    cfg: MeasurementConfig,
    end_time: float | None = None,
) -> Innovation:
    """Displacement-increment residual over the accumulated interval.

    The Jacobian assumes the state errors stayed constant within the interval
    and is referenced to the state at the update epoch, so it is the epoch
    velocity-level Jacobian scaled by the interval length. The optional
    half-interval correction subtracts half the integrated velocity-error
    dynamics, approximated with the epoch values. Resets the accumulator.
    """
    if acc.count == 0:
        raise EmptyIntervalError("no epochs accumulated since the last update")
    span = acc.duration
    z = acc.predicted - acc.measured

    c = nav.dcm
    w = imu.gyro
    t = euler_error_jacobian(c)
    psi_v = vehicle_heading_from_imu(euler_from_dcm(c).heading)
    meas_n = dcm_vehicle_to_nav(psi_v) @ velocity_obs_vframe(wheel_speed(imu, g))
    lever_vel = c @ np.cross(w, g.lever_arm)

    H = np.zeros((3, ekf.DIM))
    H[:, ekf.VEL : ekf.VEL + 3] = span * np.eye(3)
    H[:, ekf.ATT : ekf.ATT + 3] = span * skew(lever_vel)
    # The measured side is projected with the estimated vehicle heading; its
    # heading-error sensitivity enters the residual with opposite sign.
    H -= span * _heading_outer(skew(meas_n) @ _E3, t[2])
    gyro_block = -span * (c @ skew(g.lever_arm))
    H[:, ekf.BG : ekf.BG + 3] = gyro_block
    H[:, ekf.SG : ekf.SG + 3] = gyro_block * w

    if cfg.half_interval_correction:
        # Velocity-error dynamics rows at the epoch, integrated as span * rows.
        f = imu.accel
        corr = 0.5 * span * span
        H[:, ekf.ATT : ekf.ATT + 3] -= corr * skew(c @ f)
        H[:, ekf.BA : ekf.BA + 3] -= corr * c
        H[:, ekf.SA : ekf.SA + 3] -= corr * (c * f)

    innov = Innovation(z, H, np.diag(cfg.disp_noise_std**2))
    acc.reset(acc.start_time if end_time is None else end_time)
    return innov
