import math

import numpy as np
import pytest

from wheeldr.geometry import (
    EulerAngles,
    GimbalLockError,
    MountingAngles,
    angle_diff,
    dcm_body_to_wheel,
    dcm_from_euler,
    dcm_nav_to_vehicle,
    dcm_to_rotvec,
    dcm_vehicle_to_nav,
    euler_from_dcm,
    heading_rotation,
    imu_heading_from_vehicle,
    is_rotation,
    orthonormalize,
    rotvec_to_dcm,
    skew,
    vehicle_heading_from_imu,
    wrap_angle,
)
from conftest import random_rotation


def test_euler_dcm_round_trip(rng):
    for _ in range(200):
        e = EulerAngles(
            rng.uniform(-np.pi, np.pi),
            rng.uniform(-1.4, 1.4),
            rng.uniform(-np.pi, np.pi),
        )
        c = dcm_from_euler(e)
        back = dcm_from_euler(euler_from_dcm(c))
        assert np.allclose(c, back, atol=1e-12)


def test_dcm_is_rotation(rng):
    for _ in range(50):
        assert is_rotation(random_rotation(rng), tol=1e-9)


def test_euler_from_dcm_gimbal_lock():
    c = dcm_from_euler(EulerAngles(0.3, math.pi / 2, 0.1))
    with pytest.raises(GimbalLockError):
        euler_from_dcm(c)


def test_skew_antisymmetry(rng):
    for _ in range(100):
        v, w = rng.standard_normal(3), rng.standard_normal(3)
        assert np.allclose(skew(v) @ w + skew(w) @ v, 0.0, atol=1e-12)
        assert np.allclose(skew(v) @ w, np.cross(v, w), atol=1e-12)


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)  # open at -pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert wrap_angle(-3 * math.pi / 4) == pytest.approx(-3 * math.pi / 4)
    assert wrap_angle(5 * math.pi / 4) == pytest.approx(-3 * math.pi / 4)


def test_angle_diff_wraps():
    a, b = math.radians(179.0), math.radians(-179.0)
    assert angle_diff(a, b) == pytest.approx(math.radians(-2.0))
    assert angle_diff(b, a) == pytest.approx(math.radians(2.0))


def test_nav_to_vehicle_oracle():
    # Vehicle pointing east sees north as leftward (-y in FRD).
    north = np.array([1.0, 0.0, 0.0])
    assert np.allclose(dcm_nav_to_vehicle(math.pi / 2) @ north, [0.0, -1.0, 0.0], atol=1e-12)


def test_nav_vehicle_rotation_properties(rng):
    for _ in range(30):
        psi = rng.uniform(-np.pi, np.pi)
        c = dcm_nav_to_vehicle(psi)
        assert is_rotation(c)
        assert np.allclose(c.T, dcm_vehicle_to_nav(psi), atol=1e-15)
        assert np.allclose(
            dcm_vehicle_to_nav(psi),
            dcm_from_euler(EulerAngles(0.0, 0.0, psi)),
            atol=1e-12,
        )


def test_heading_rotation_matches_euler(rng):
    psi = 0.7
    assert np.allclose(heading_rotation(psi), dcm_from_euler(EulerAngles(0, 0, psi)))


def test_imu_vehicle_heading_conversion(rng):
    for _ in range(50):
        psi_v = rng.uniform(-np.pi, np.pi)
        psi_b = imu_heading_from_vehicle(psi_v)
        assert vehicle_heading_from_imu(psi_b) == pytest.approx(psi_v, abs=1e-12)
    # Quarter-turn lead wraps across the seam.
    assert imu_heading_from_vehicle(3 * math.pi / 4) == pytest.approx(-3 * math.pi / 4)


def test_mounting_angles_validation():
    MountingAngles(0.05, -0.05)
    with pytest.raises(ValueError):
        MountingAngles(0.3, 0.0)
    with pytest.raises(ValueError):
        MountingAngles(0.0, -0.25)


def test_body_to_wheel_small_angles():
    m = MountingAngles(0.01, -0.02)
    c = dcm_body_to_wheel(m)
    assert is_rotation(c)
    # Small-angle structure: close to identity, pitch/heading in the right slots.
    assert c[2, 0] == pytest.approx(-math.sin(m.pitch))
    assert c[1, 1] == pytest.approx(math.cos(m.heading))
    assert np.allclose(dcm_body_to_wheel(MountingAngles(0.0, 0.0)), np.eye(3))


def test_rotvec_round_trip(rng):
    for _ in range(200):
        v = rng.standard_normal(3)
        v *= rng.uniform(0.0, 3.0) / max(np.linalg.norm(v), 1e-12)
        c = rotvec_to_dcm(v)
        assert is_rotation(c)
        assert np.allclose(dcm_to_rotvec(c), v, atol=1e-9)


def test_rotvec_small_angle():
    v = np.array([1e-14, -2e-14, 1e-14])
    c = rotvec_to_dcm(v)
    assert np.allclose(c, np.eye(3) + skew(v), atol=1e-15)
    assert np.allclose(dcm_to_rotvec(c), v, atol=1e-15)


def test_rotvec_near_pi(rng):
    for axis in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                 np.array([0.6, -0.8, 0.0]), np.array([0.36, 0.48, 0.8])):
        v = axis / np.linalg.norm(axis) * (math.pi - 1e-8)
        c = rotvec_to_dcm(v)
        back = dcm_to_rotvec(c)
        # Sign of the axis may flip exactly at pi; compare rotations.
        assert np.allclose(rotvec_to_dcm(back), c, atol=1e-6)


def test_orthonormalize_property(rng):
    for _ in range(100):
        c = random_rotation(rng) + 1e-6 * rng.standard_normal((3, 3))
        q = orthonormalize(c)
        assert np.abs(q.T @ q - np.eye(3)).max() < 1e-9
        assert np.abs(q - c).max() < 1e-5  # stays close to the input
