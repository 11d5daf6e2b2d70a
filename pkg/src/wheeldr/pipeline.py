"""End-to-end dead-reckoning pipeline: alignment, propagation, filtering.

Static alignment seeds roll/pitch and the gyro bias; heading, velocity, and
position come from the reference at the filter start epoch. The mechanization
runs at the IMU rate, covariance propagation at a configurable cadence, and
measurement updates with closed-loop feedback at the update rate.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass

import numpy as np

from . import ekf, measurements
from .config import RunConfig
from .evaluate import DriftReport, ErrorSeries, align_and_diff, drift_rate
from .geometry import EulerAngles, dcm_from_euler
from .io import PoseSeries
from .mechanization import (
    ImuSample,
    NavState,
    SensorErrors,
    compensate,
    propagate,
    static_align,
)
from .simulate import ImuStream


class DivergenceError(RuntimeError):
    """Filter position uncertainty exceeded the configured ceiling."""


@dataclass
class RunRecord:
    """Everything produced by one pipeline run."""

    config: RunConfig
    times: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    euler: np.ndarray  # roll, pitch, yaw (IMU heading)
    series: ErrorSeries
    report: DriftReport
    elapsed: float
    updates_applied: int
    updates_gated: int


def _interp_row(t: float, times: np.ndarray, table: np.ndarray) -> np.ndarray:
    return np.array([np.interp(t, times, table[:, i]) for i in range(table.shape[1])])


def _euler_batch(dcm: np.ndarray) -> np.ndarray:
    """Roll/pitch/yaw columns from a stack of DCMs."""
    roll = np.arctan2(dcm[:, 2, 1], dcm[:, 2, 2])
    pitch = np.arcsin(np.clip(-dcm[:, 2, 0], -1.0, 1.0))
    yaw = np.arctan2(dcm[:, 1, 0], dcm[:, 0, 0])
    return np.column_stack([roll, pitch, yaw])


def run_pipeline(
    cfg: RunConfig,
    stream: ImuStream,
    reference: PoseSeries,
    ref_yaw_kind: str = "imu",
    segment_length: float | None = None,
) -> RunRecord:
    """Run one model over an IMU stream against a reference trajectory.

    `ref_yaw_kind` states whether the reference yaw column is the IMU heading
    or the vehicle heading.
    """
    t_start_wall = _time.perf_counter()
    ref_times = reference.times + cfg.time_offset

    # Static alignment on the leading window.
    t0 = stream.times[0]
    n_static = int(np.searchsorted(stream.times, t0 + cfg.static_window, side="right"))
    window = [stream[i] for i in range(n_static)]
    roll, pitch, gyro_bias = static_align(window, cfg.gravity)
    sensors = SensorErrors(gyro_bias=gyro_bias)

    # Initial state from the reference at the end of the alignment window.
    k0 = max(n_static - 1, 0)
    t_init = float(stream.times[k0])
    pos0 = _interp_row(t_init, ref_times, reference.pos)
    vel0 = _interp_row(t_init, ref_times, reference.vel)
    yaw_ref = float(np.interp(t_init, ref_times, np.unwrap(reference.euler[:, 2])))
    psi_b = yaw_ref if ref_yaw_kind == "imu" else yaw_ref + 0.5 * math.pi
    psi_b += math.radians(cfg.init_heading_error_deg)
    nav = NavState(
        t_init,
        pos0 + np.asarray(cfg.init_pos_error),
        vel0 + np.asarray(cfg.init_vel_error),
        dcm_from_euler(EulerAngles(roll, pitch, psi_b)),
    )

    pn_cfg = cfg.process_noise
    meas_cfg = cfg.measurement
    geom = cfg.estimator_geometry
    P = ekf.initial_covariance(pn_cfg)

    n = len(stream)
    cov_stride = int(round(cfg.imu_rate / cfg.cov_rate))
    upd_stride = int(round(cfg.imu_rate / cfg.update_rate))
    dt_cov = cov_stride / cfg.imu_rate
    ceiling_sq = cfg.divergence_ceiling**2

    out_t = np.empty(n - k0)
    out_pos = np.empty((n - k0, 3))
    out_vel = np.empty((n - k0, 3))
    out_dcm = np.empty((n - k0, 3, 3))

    def record(j: int, state: NavState) -> None:
        out_t[j] = state.time
        out_pos[j] = state.pos
        out_vel[j] = state.vel
        out_dcm[j] = state.dcm

    record(0, nav)
    prev = compensate(stream[k0], sensors)
    acc = measurements.DisplacementAccumulator(start_time=t_init)
    updates_applied = 0
    updates_gated = 0

    for k in range(k0 + 1, n):
        curr = compensate(stream[k], sensors)
        dt = curr.time - prev.time
        nav = propagate(nav, prev, curr, cfg.gravity)

        if cfg.model == measurements.DISPLACEMENT:
            measurements.accumulate_displacement(acc, nav, curr, geom, dt)

        steps = k - k0
        if steps % cov_stride == 0:
            F, gqg = ekf.continuous_dynamics(nav, curr, pn_cfg)
            phi, qd = ekf.discretize(F, gqg, dt_cov)
            P = ekf.predict(P, phi, qd)
            if P[0, 0] + P[1, 1] > ceiling_sq:
                raise DivergenceError(
                    f"horizontal position sigma exceeded {cfg.divergence_ceiling} m at t={nav.time:.2f}"
                )

        if steps % upd_stride == 0:
            innov = _innovation(cfg.model, acc, nav, curr, geom, meas_cfg)
            accept = True
            if meas_cfg.gate_threshold is not None:
                nis = ekf.innovation_squared(P, innov.z, innov.H, innov.R)
                accept = nis <= meas_cfg.gate_threshold
            if accept:
                dx, P = ekf.update(P, innov.z, innov.H, innov.R)
                nav, sensors = ekf.feedback(nav, sensors, dx)
                updates_applied += 1
            else:
                updates_gated += 1

        record(k - k0, nav)
        prev = curr

    out_euler = _euler_batch(out_dcm)
    series = align_and_diff(
        out_t,
        out_pos,
        out_euler[:, 2],
        ref_times,
        reference.pos,
        reference.vel,
        reference.euler[:, 2],
        est_yaw_kind="imu",
        ref_yaw_kind=ref_yaw_kind,
    )
    report = drift_rate(series, segment_length or 100.0)
    elapsed = _time.perf_counter() - t_start_wall
    return RunRecord(
        cfg,
        out_t,
        out_pos,
        out_vel,
        out_euler,
        series,
        report,
        elapsed,
        updates_applied,
        updates_gated,
    )


def _innovation(model, acc, nav, imu, geom, meas_cfg) -> measurements.Innovation:
    if model == measurements.VELOCITY:
        return measurements.velocity_innovation(nav, imu, geom, meas_cfg)
    if model == measurements.CONTACT:
        return measurements.contact_innovation(nav, imu, geom, meas_cfg)
    return measurements.displacement_innovation(
        acc, nav, imu, geom, meas_cfg, end_time=nav.time
    )


def plain_ins(
    stream: ImuStream,
    initial: NavState,
    sensors: SensorErrors | None = None,
    gravity: float | None = None,
):
    """Propagate a stream through the mechanization with no filtering.

    Returns (times, pos, vel, euler). Used for open-loop drift studies.
    """
    from .mechanization import GRAVITY

    g = GRAVITY if gravity is None else gravity
    sensors = sensors or SensorErrors()
    k0 = int(np.searchsorted(stream.times, initial.time, side="right"))
    nav = initial
    n = len(stream)
    out_t = np.empty(n - k0 + 1)
    out_pos = np.empty((n - k0 + 1, 3))
    out_vel = np.empty((n - k0 + 1, 3))
    out_dcm = np.empty((n - k0 + 1, 3, 3))

    def record(j, state):
        out_t[j] = state.time
        out_pos[j] = state.pos
        out_vel[j] = state.vel
        out_dcm[j] = state.dcm

    record(0, nav)
    prev = compensate(stream[k0 - 1], sensors) if k0 > 0 else None
    for k in range(k0, n):
        curr = compensate(stream[k], sensors)
        if prev is not None:
            nav = propagate(nav, prev, curr, g)
        record(k - k0 + 1, nav)
        prev = curr
    return out_t, out_pos, out_vel, _euler_batch(out_dcm)
