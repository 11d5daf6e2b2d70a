import math

import numpy as np
import pytest
from scipy.linalg import expm

from wheeldr import ekf
from wheeldr.ekf import (
    ATT, BA, BG, DIM, POS, SA, SG, VEL,
    GaussMarkovParams,
    ProcessNoiseConfig,
    SingularInnovationError,
)
from wheeldr.geometry import dcm_to_rotvec, rotvec_to_dcm, skew
from wheeldr.mechanization import GRAVITY, ImuSample, NavState, SensorErrors
from conftest import random_rotation, rel_error


def _noise_cfg():
    # Distinct correlation times per state so block mixups cannot cancel.
    return ProcessNoiseConfig(
        arw=1e-4,
        vrw=1e-3,
        gyro_bias=GaussMarkovParams(100.0, 1e-3),
        accel_bias=GaussMarkovParams(200.0, 1e-2),
        gyro_scale=GaussMarkovParams(300.0, 1e-3),
        accel_scale=GaussMarkovParams(400.0, 1e-3),
    )


def _split(x):
    return (x[POS:POS + 3], x[VEL:VEL + 3], x[ATT:ATT + 3],
            x[BG:BG + 3], x[BA:BA + 3], x[SG:SG + 3], x[SA:SA + 3])


def _error_state_at(h, eps0, nom, cfg):
    """Propagate truth and erred estimate over a short horizon h; return the error.

    The estimate runs on the same physical IMU signal seen through the
    residual sensor errors; attitudes advance through exact exponentials,
    velocity/position through a second-order Taylor step. Central differences
    in h cancel the even-order truncation terms.
    """
    p, v, c, w, f = nom
    g_vec = np.array([0.0, 0.0, GRAVITY])
    dp0, dv0, phi0, dbg0, dba0, dsg0, dsa0 = _split(eps0)

    w_hat = w + dbg0 + w * dsg0
    f_hat = f + dba0 + f * dsa0
    c_hat0 = rotvec_to_dcm(-phi0) @ c

    # Error components are assembled symbolically so no large common state
    # terms are subtracted (that cancellation would swamp the tiny signal).
    da = c_hat0 @ f_hat - c @ f
    dj = c_hat0 @ np.cross(w_hat, f_hat) - c @ np.cross(w, f)
    dv_h = dv0 + da * h + 0.5 * dj * h * h
    dp_h = dp0 + dv0 * h + 0.5 * da * h * h

    c_t = c @ rotvec_to_dcm(w * h)
    c_e = c_hat0 @ rotvec_to_dcm(w_hat * h)
    phi_h = -dcm_to_rotvec(c_e @ c_t.T)

    out = np.empty(DIM)
    out[POS:POS + 3] = dp_h
    out[VEL:VEL + 3] = dv_h
    out[ATT:ATT + 3] = phi_h
    out[BG:BG + 3] = dbg0 * math.exp(-h / cfg.gyro_bias.corr_time)
    out[BA:BA + 3] = dba0 * math.exp(-h / cfg.accel_bias.corr_time)
    out[SG:SG + 3] = dsg0 * math.exp(-h / cfg.gyro_scale.corr_time)
    out[SA:SA + 3] = dsa0 * math.exp(-h / cfg.accel_scale.corr_time)
    return out


def test_dynamics_matrix_matches_finite_differences(rng):
    cfg = _noise_cfg()
    h, delta = 1e-4, 1e-5
    worst = 0.0
    for _ in range(100):
        c = random_rotation(rng)
        nom = (
            rng.standard_normal(3),
            rng.standard_normal(3),
            c,
            rng.standard_normal(3) * 3.0,
            rng.standard_normal(3) * 5.0 + np.array([0, 0, -GRAVITY]) @ c,
        )
        nav = NavState(0.0, nom[0], nom[1], c)
        imu = ImuSample(0.0, nom[3], nom[4])
        F, _ = ekf.continuous_dynamics(nav, imu, cfg)
        F_num = np.empty_like(F)
        for j in range(DIM):
            e = np.zeros(DIM)
            e[j] = delta
            # Central in both the horizon and the error magnitude so the
            # even-order truncation terms of each cancel.
            stencil = (
                _error_state_at(h, e, nom, cfg)
                - _error_state_at(-h, e, nom, cfg)
                - _error_state_at(h, -e, nom, cfg)
                + _error_state_at(-h, -e, nom, cfg)
            )
            F_num[:, j] = stencil / (4.0 * h * delta)
        worst = max(worst, rel_error(F_num, F))
    assert worst < 1e-6


def test_noise_psd_diagonal():
    cfg = _noise_cfg()
    _, gqg = ekf.continuous_dynamics(
        NavState(0.0, np.zeros(3), np.zeros(3), np.eye(3)),
        ImuSample(0.0, np.zeros(3), np.zeros(3)),
        cfg,
    )
    d = np.diag(gqg)
    assert np.allclose(gqg, np.diag(d))
    assert np.allclose(d[POS:POS + 3], 0.0)
    assert np.allclose(d[VEL:VEL + 3], cfg.vrw**2)
    assert np.allclose(d[ATT:ATT + 3], cfg.arw**2)
    assert np.allclose(d[BG:BG + 3], 2 * 1e-3**2 / 100.0)
    assert np.allclose(d[BA:BA + 3], 2 * 1e-2**2 / 200.0)


def test_gauss_markov_psd_formula():
    gm = GaussMarkovParams(50.0, 0.3)
    assert gm.psd == pytest.approx(2 * 0.3**2 / 50.0)
    with pytest.raises(ValueError):
        GaussMarkovParams(0.0, 0.1)
    with pytest.raises(ValueError):
        GaussMarkovParams(10.0, -0.1)


def test_unit_conversions():
    cfg = ProcessNoiseConfig.from_spec_units(200.0, 0.24, 0.01, 3.0)
    assert cfg.gyro_bias.sigma == pytest.approx(200.0 * math.pi / 180.0 / 3600.0)
    assert cfg.arw == pytest.approx(0.24 * math.pi / 180.0 / 60.0)
    assert cfg.vrw == pytest.approx(3.0 / 60.0)
    assert cfg.accel_bias.sigma == pytest.approx(0.01)
    assert cfg.gyro_scale.sigma == pytest.approx(1e-3)


def test_discretize_against_matrix_exponential(rng):
    cfg = _noise_cfg()
    for _ in range(20):
        nav = NavState(0.0, rng.standard_normal(3), rng.standard_normal(3),
                       random_rotation(rng))
        imu = ImuSample(0.0, rng.standard_normal(3), rng.standard_normal(3) * 5)
        F, gqg = ekf.continuous_dynamics(nav, imu, cfg)
        dt = 0.05
        phi, qd = ekf.discretize(F, gqg, dt)
        # First-order transition vs the exact exponential: Taylor remainder bound.
        err = np.linalg.norm(phi - expm(F * dt), 2)
        bound = np.linalg.norm(F, 2) ** 2 * dt**2
        assert err <= bound
        assert np.allclose(qd, qd.T)
        assert np.all(np.linalg.eigvalsh(qd) > -1e-18)


def test_discretize_rejects_bad_dt():
    F = np.zeros((DIM, DIM))
    q = np.zeros((DIM, DIM))
    with pytest.raises(ValueError):
        ekf.discretize(F, q, 0.0)
    with pytest.raises(ValueError):
        ekf.discretize(F, q, 0.2)


def test_predict_scalar_oracle():
    # Embedded 1-state case: p+ = phi^2 p + q.
    phi = np.eye(DIM)
    phi[0, 0] = 0.9
    qd = np.zeros((DIM, DIM))
    qd[0, 0] = 0.04
    P = np.zeros((DIM, DIM))
    P[0, 0] = 2.0
    out = ekf.predict(P, phi, qd)
    assert out[0, 0] == pytest.approx(0.9**2 * 2.0 + 0.04)


def test_update_scalar_kalman_oracle():
    # p=1, h=1, r=1, z=2 -> gain 0.5, dx = 1, p+ = 0.5.
    P = np.eye(DIM)
    H = np.zeros((1, DIM))
    H[0, 0] = 1.0
    R = np.array([[1.0]])
    z = np.array([2.0])
    dx, P1 = ekf.update(P, z, H, R)
    assert dx[0] == pytest.approx(1.0)
    assert np.allclose(dx[1:], 0.0)
    assert P1[0, 0] == pytest.approx(0.5)
    assert np.allclose(np.diag(P1)[1:], 1.0)


def test_update_joseph_matches_simple_form(rng):
    for _ in range(20):
        A = rng.standard_normal((DIM, DIM))
        P = A @ A.T + np.eye(DIM)
        H = rng.standard_normal((3, DIM))
        R = np.diag(rng.uniform(0.5, 2.0, 3))
        z = rng.standard_normal(3)
        dx, P1 = ekf.update(P, z, H, R)
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        assert np.allclose(dx, K @ z, atol=1e-10)
        assert np.allclose(P1, P - K @ H @ P, atol=1e-8)


def test_update_singular_innovation():
    P = np.zeros((DIM, DIM))
    H = np.zeros((2, DIM))
    H[0, 0] = H[1, 0] = 1.0  # duplicate row, R = 0 -> singular S
    R = np.zeros((2, 2))
    with pytest.raises(SingularInnovationError):
        ekf.update(P, np.zeros(2), H, R)


def test_innovation_squared():
    P = np.eye(DIM)
    H = np.zeros((2, DIM))
    H[0, 0] = 1.0
    H[1, 1] = 1.0
    R = np.eye(2)
    z = np.array([2.0, 0.0])
    # S = 2I -> z' S^-1 z = 4/2.
    assert ekf.innovation_squared(P, z, H, R) == pytest.approx(2.0)


def test_feedback_involution(rng):
    for _ in range(20):
        nav = NavState(1.0, rng.standard_normal(3), rng.standard_normal(3),
                       random_rotation(rng))
        sensors = SensorErrors()
        dx = rng.standard_normal(DIM) * 1e-3
        fwd, s_fwd = ekf.feedback(nav, sensors, dx)
        back, s_back = ekf.feedback(fwd, s_fwd, -dx)
        phi_norm = np.linalg.norm(dx[ATT:ATT + 3])
        assert np.allclose(back.pos, nav.pos, atol=1e-12)
        assert np.allclose(back.vel, nav.vel, atol=1e-12)
        assert np.abs(back.dcm - nav.dcm).max() < phi_norm**2 + 1e-12
        assert np.allclose(s_back.gyro_bias, sensors.gyro_bias, atol=1e-15)


def test_feedback_attitude_direction():
    # estimate = (I - skew(phi)) truth; feedback must rotate the estimate
    # toward the truth: applying the true phi recovers the true attitude.
    truth = rotvec_to_dcm(np.array([0.02, -0.01, 0.03]))
    phi = np.array([1e-3, -2e-3, 5e-4])
    est = (np.eye(3) - skew(phi)) @ truth
    nav = NavState(0.0, np.zeros(3), np.zeros(3), est)
    dx = np.zeros(DIM)
    dx[ATT:ATT + 3] = phi
    out, _ = ekf.feedback(nav, SensorErrors(), dx)
    assert np.abs(out.dcm - truth).max() < np.linalg.norm(phi) ** 2 * 2


def test_initial_covariance_blocks():
    cfg = _noise_cfg()
    P = ekf.initial_covariance(cfg)
    d = np.diag(P)
    assert np.allclose(P, np.diag(d))
    assert np.allclose(d[POS:POS + 3], 0.01**2)
    assert np.allclose(d[VEL:VEL + 3], 0.05**2)
    assert d[ATT] == pytest.approx(math.radians(0.5) ** 2)
    assert d[ATT + 2] == pytest.approx(math.radians(1.0) ** 2)
    assert np.allclose(d[BG:BG + 3], cfg.gyro_bias.sigma**2)
