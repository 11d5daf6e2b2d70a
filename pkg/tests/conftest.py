"""Shared fixtures and finite-difference helpers."""

import numpy as np
import pytest

from wheeldr.geometry import EulerAngles, dcm_from_euler


def random_rotation(rng):
    """Uniform-ish random rotation away from gimbal lock."""
    roll = rng.uniform(-np.pi, np.pi)
    pitch = rng.uniform(-1.2, 1.2)
    heading = rng.uniform(-np.pi, np.pi)
    return dcm_from_euler(EulerAngles(roll, pitch, heading))


def central_diff(f, x0, step):
    """Central finite-difference Jacobian of f: R^n -> R^m at x0."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0))
    J = np.empty((f0.size, x0.size))
    for j in range(x0.size):
        dx = np.zeros_like(x0)
        dx[j] = step
        J[:, j] = (np.asarray(f(x0 + dx)) - np.asarray(f(x0 - dx))) / (2.0 * step)
    return J


def rel_error(a, b):
    """Frobenius relative error with an absolute floor for zero blocks."""
    scale = max(np.linalg.norm(b), 1.0)
    return np.linalg.norm(a - b) / scale


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240824)


@pytest.fixture(scope="session")
def small_course():
    """Short noise-free simulated course shared by kinematic tests."""
    from wheeldr.config import RunConfig
    from wheeldr.io import PoseSeries
    from wheeldr.simulate import generate_truth, named_profile, synthesize_imu

    cfg = RunConfig()
    truth = generate_truth(named_profile("line"), cfg.geometry, cfg.imu_rate,
                           gravity=cfg.gravity)
    stream = synthesize_imu(truth, cfg.gravity)
    zeros = np.zeros(len(truth))
    ref = PoseSeries(
        truth.times,
        truth.imu_pos,
        truth.imu_vel,
        np.column_stack([truth.wheel_roll, zeros, truth.imu_heading()]),
    )
    return cfg, truth, stream, ref
