"""Strapdown INS propagation in a flat local NED frame, plus static alignment.

Earth rotation and transport rate are neglected: the MEMS gyro bias is an
order of magnitude above earth rate, and the system is a local dead-reckoning
solution anchored at the start pose. Gravity is a configurable scalar along
+down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from .geometry import orthonormalize, rotvec_to_dcm

GRAVITY = 9.80665  # m/s^2, default scalar gravity along +down

# Variation of the block-averaged specific force above which a "static"
# window is rejected. Block averaging keeps the check insensitive to white
# sensor noise (0.7 m/s^2 per sample for a consumer MEMS chip at 200 Hz)
# while actual motion shifts the block means by far more than this.
STATIC_MOTION_THRESHOLD = 0.3  # m/s^2
_STATIC_BLOCK = 50  # samples per averaging block


class NonMonotonicTimeError(ValueError):
    """IMU sample times must strictly increase."""


class WindowTooShortError(ValueError):
    """Static alignment needs at least one second of data."""


class MotionDetectedError(ValueError):
    """The alignment window is not static."""


@dataclass
class ImuSample:
    """One IMU epoch: angular rate (rad/s) and specific force (m/s^2)."""

    time: float
    gyro: np.ndarray
    accel: np.ndarray


@dataclass
class NavState:
    """Navigation solution of the IMU: position/velocity in NED, body-to-nav DCM."""

    time: float
    pos: np.ndarray
    vel: np.ndarray
    dcm: np.ndarray

    def copy(self) -> "NavState":
        return NavState(self.time, self.pos.copy(), self.vel.copy(), self.dcm.copy())


@dataclass
class SensorErrors:
    """Accumulated estimates of the IMU error parameters used for compensation."""

    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_scale: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_scale: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "SensorErrors":
        return SensorErrors(
            self.gyro_bias.copy(),
            self.accel_bias.copy(),
            self.gyro_scale.copy(),
            self.accel_scale.copy(),
        )


def compensate(s: ImuSample, e: SensorErrors) -> ImuSample:
    """Remove estimated bias and scale factor from a raw sample.

    Inverts the sensor model out = true * (1 + scale) + bias.
    """
    gyro = (s.gyro - e.gyro_bias) / (1.0 + e.gyro_scale)
    accel = (s.accel - e.accel_bias) / (1.0 + e.accel_scale)
    return ImuSample(s.time, gyro, accel)


def propagate(
    nav: NavState, prev: ImuSample, curr: ImuSample, gravity: float = GRAVITY
) -> NavState:
    """Advance the navigation state by one IMU interval.

    Single-sample update: the attitude advances through the exponential of the
    current rotation increment, the specific force is rotated through the
    mid-interval attitude, and position uses trapezoidal velocity integration.
    No coning/sculling corrections (wheel spin is slow relative to the sample
    rate).
    """
    dt = curr.time - prev.time
    if dt <= 0.0:
        raise NonMonotonicTimeError(f"dt = {dt} between {prev.time} and {curr.time}")

    # Exp(dtheta) = Exp(dtheta/2)^2, so one exponential covers both attitudes.
    e_half = rotvec_to_dcm(curr.gyro * (0.5 * dt))
    c_mid = nav.dcm @ e_half
    c_new = orthonormalize(c_mid @ e_half)

    dv = c_mid @ (curr.accel * dt)
    dv[2] += gravity * dt
    vel = nav.vel + dv
    pos = nav.pos + 0.5 * dt * (nav.vel + vel)
    return NavState(curr.time, pos, vel, c_new)


def static_align(window, gravity: float = GRAVITY):
    """Estimate roll, pitch, and gyro bias from a static data window.

    Returns (roll, pitch, gyro_bias). Leveling uses the mean specific force;
    the mean angular rate is taken as the gyro bias (earth rate neglected).
    """
    samples = list(window)
    if len(samples) < 2 or samples[-1].time - samples[0].time < 1.0:
        raise WindowTooShortError("need at least 1 s of static data")

    f = np.array([s.accel for s in samples])
    w = np.array([s.gyro for s in samples])
    nblk = max(len(samples) // _STATIC_BLOCK, 2)
    blocks = np.array([b.mean(axis=0) for b in np.array_split(f, nblk)])
    if float(np.linalg.norm(blocks.std(axis=0))) > STATIC_MOTION_THRESHOLD:
        raise MotionDetectedError("specific-force variation too high for alignment")

    f_mean = f.mean(axis=0)
    roll = math.atan2(-f_mean[1], -f_mean[2])
    pitch = math.atan2(f_mean[0], math.hypot(f_mean[1], f_mean[2]))
    gyro_bias = w.mean(axis=0)
    return roll, pitch, gyro_bias
