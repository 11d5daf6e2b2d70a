"""Coordinate frames and rotation utilities.

Conventions: the navigation frame (n) is local north-east-down, the vehicle
frame (v) is forward-right-down, the wheel frame (w) has x along the wheel
rotation axis pointing to the right of the vehicle, and the IMU body frame (b)
rotates with the wheel with x on the rotation axis. Euler angles are
roll-pitch-heading applied in ZYX order. The IMU heading leads the vehicle
heading by 90 degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

_DCM_ORTHO_TOL = 1e-9
_ORTHO_BASE = 1.5 * np.eye(3)
_ORTHO_BASE.setflags(write=False)
_GIMBAL_TOL = 1e-9


class GimbalLockError(ValueError):
    """Pitch is at +/-90 deg; roll and heading are not separable."""


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    return math.pi - (math.pi - np.asarray(angle)) % TWO_PI


def angle_diff(a, b):
    """Shortest-arc difference a - b, wrapped to (-pi, pi]."""
    return wrap_angle(np.asarray(a) - np.asarray(b))


@dataclass(frozen=True)
class EulerAngles:
    """Roll, pitch, heading in radians (ZYX convention)."""

    roll: float
    pitch: float
    heading: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.heading])


@dataclass(frozen=True)
class MountingAngles:
    """Small pitch/heading misalignment of the IMU relative to the wheel."""

    pitch: float
    heading: float

    def __post_init__(self):
        if abs(self.pitch) >= 0.2 or abs(self.heading) >= 0.2:
            raise ValueError(
                f"mounting angles must be small (<0.2 rad): {self.pitch}, {self.heading}"
            )


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def dcm_from_euler(e: EulerAngles) -> np.ndarray:
    """Body-to-nav DCM from roll/pitch/heading."""
    cr, sr = math.cos(e.roll), math.sin(e.roll)
    cp, sp = math.cos(e.pitch), math.sin(e.pitch)
    ch, sh = math.cos(e.heading), math.sin(e.heading)
    return np.array(
        [
            [cp * ch, -cr * sh + sr * sp * ch, sr * sh + cr * sp * ch],
            [cp * sh, cr * ch + sr * sp * sh, -sr * ch + cr * sp * sh],
            [-sp, sr * cp, cr * cp],
        ]
    )


def euler_from_dcm(c: np.ndarray) -> EulerAngles:
    """Inverse of :func:`dcm_from_euler`; raises GimbalLockError near pitch = +/-90 deg."""
    s_pitch = -c[2, 0]
    if abs(s_pitch) > 1.0 - _GIMBAL_TOL:
        raise GimbalLockError(f"pitch too close to +/-90 deg (sin = {s_pitch:.12f})")
    pitch = math.asin(s_pitch)
    roll = math.atan2(c[2, 1], c[2, 2])
    heading = math.atan2(c[1, 0], c[0, 0])
    return EulerAngles(roll, pitch, heading)


def heading_rotation(psi: float) -> np.ndarray:
    """Rotation about the down axis by heading psi (v-to-n for a level vehicle)."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def dcm_nav_to_vehicle(psi_v: float) -> np.ndarray:
    """DCM taking n-frame vectors into the vehicle frame of heading psi_v."""
    return heading_rotation(psi_v).T


def dcm_vehicle_to_nav(psi_v: float) -> np.ndarray:
    return heading_rotation(psi_v)


def dcm_body_to_wheel(m: MountingAngles) -> np.ndarray:
    """Body-to-wheel DCM from the pitch/heading mounting misalignments."""
    ct, st = math.cos(m.pitch), math.sin(m.pitch)
    ch, sh = math.cos(m.heading), math.sin(m.heading)
    return np.array(
        [
            [ct * ch, -sh, st * ch],
            [ct * sh, ch, st * sh],
            [-st, 0.0, ct],
        ]
    )


def vehicle_heading_from_imu(psi_b: float) -> float:
    """Vehicle heading given the IMU heading (IMU leads by 90 deg)."""
    return float(wrap_angle(psi_b - HALF_PI))


def imu_heading_from_vehicle(psi_v: float) -> float:
    return float(wrap_angle(psi_v + HALF_PI))


def vehicle_euler(psi_v: float) -> EulerAngles:
    """Vehicle attitude under the horizontal-motion assumption: roll = pitch = 0."""
    return EulerAngles(0.0, 0.0, psi_v)


def rotvec_to_dcm(v) -> np.ndarray:
    """Rodrigues formula: rotation matrix of the rotation vector v."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    n2 = x * x + y * y + z * z
    angle = math.sqrt(n2)
    if angle < 1e-12:
        a, b = 1.0, 0.5
    else:
        a = math.sin(angle) / angle
        b = (1.0 - math.cos(angle)) / n2
    # I + a*skew(v) + b*skew(v)^2 written out entrywise; this runs per IMU
    # sample, so no matrix temporaries.
    xx, yy, zz = b * x * x, b * y * y, b * z * z
    xy, xz, yz = b * x * y, b * x * z, b * y * z
    ax, ay, az = a * x, a * y, a * z
    return np.array(
        [
            [1.0 - yy - zz, xy - az, xz + ay],
            [xy + az, 1.0 - xx - zz, yz - ax],
            [xz - ay, yz + ax, 1.0 - xx - yy],
        ]
    )


def dcm_to_rotvec(c: np.ndarray) -> np.ndarray:
    """Rotation vector (log map) of a DCM.

    Goes through the quaternion (Shepperd's method) so the extraction stays
    well-conditioned at all angles, including near pi where the antisymmetric
    part of the matrix vanishes.
    """
    tr = c[0, 0] + c[1, 1] + c[2, 2]
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        qw = 0.25 * s
        qv = np.array([c[2, 1] - c[1, 2], c[0, 2] - c[2, 0], c[1, 0] - c[0, 1]]) / s
    else:
        i = int(np.argmax([c[0, 0], c[1, 1], c[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * math.sqrt(max(1.0 + c[i, i] - c[j, j] - c[k, k], 0.0))
        qv = np.empty(3)
        qv[i] = 0.25 * s
        qv[j] = (c[j, i] + c[i, j]) / s
        qv[k] = (c[k, i] + c[i, k]) / s
        qw = (c[k, j] - c[j, k]) / s
    if qw < 0.0:  # keep the angle in [0, pi]
        qw, qv = -qw, -qv
    norm_qv = math.sqrt(qv[0] ** 2 + qv[1] ** 2 + qv[2] ** 2)
    if norm_qv < 1e-12:
        return 2.0 * qv
    return (2.0 * math.atan2(norm_qv, qw) / norm_qv) * qv


def orthonormalize(c: np.ndarray) -> np.ndarray:
    """Project a nearly orthonormal matrix back onto SO(3).

    One step of the symmetric (Bjorck) iteration; adequate for per-step
    re-orthonormalization where the drift is tiny.
    """
    return c @ (_ORTHO_BASE - 0.5 * (c.T @ c))


def is_rotation(c: np.ndarray, tol: float = _DCM_ORTHO_TOL) -> bool:
    return (
        np.abs(c.T @ c - np.eye(3)).max() <= tol
        and abs(np.linalg.det(c) - 1.0) <= tol
    )
