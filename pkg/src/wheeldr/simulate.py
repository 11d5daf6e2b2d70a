"""Ground-truth wheel kinematics and synthetic IMU generation.

The vehicle moves in the horizontal plane along a segment profile (piecewise
constant heading rate, piecewise linear speed). The wheel rolls without
slipping, the IMU rides on the wheel at a lever arm from the hub, and the IMU
stream is synthesized by inverting the strapdown mechanization so that a
noise-free round trip reproduces the truth to integration accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import wrap_angle
from .mechanization import GRAVITY, ImuSample, SensorErrors
from .measurements import WheelGeometry

DEG_PER_HOUR = math.pi / 180.0 / 3600.0
DEG_PER_SQRT_HOUR = math.pi / 180.0 / 60.0
PER_SQRT_HOUR = 1.0 / 60.0


@dataclass(frozen=True)
class Segment:
    """One profile piece: duration, forward speed (optionally ramped), heading rate."""

    duration: float
    speed: float
    heading_rate: float = 0.0
    speed_end: float | None = None

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("segment duration must be positive")
        if self.speed < 0.0 or (self.speed_end is not None and self.speed_end < 0.0):
            raise ValueError("segment speeds must be non-negative")


@dataclass(frozen=True)
class TrajectoryProfile:
    segments: tuple[Segment, ...]
    start_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    start_heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(
            self, "start_position", np.asarray(self.start_position, dtype=float)
        )
        if self.distance() <= 0.0:
            raise ValueError("profile must cover a positive distance")

    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def distance(self) -> float:
        total = 0.0
        for s in self.segments:
            end = s.speed if s.speed_end is None else s.speed_end
            total += 0.5 * (s.speed + end) * s.duration
        return total

    def state_at(self, t: float):
        """(speed, heading_rate) at profile time t."""
        for s in self.segments:
            if t < s.duration:
                if s.speed_end is None:
                    return s.speed, s.heading_rate
                frac = t / s.duration
                return s.speed + frac * (s.speed_end - s.speed), s.heading_rate
            t -= s.duration
        last = self.segments[-1]
        return (last.speed if last.speed_end is None else last.speed_end, 0.0)


@dataclass(frozen=True)
class SensorErrorSpec:
    """Datasheet-style error magnitudes used to corrupt ideal IMU data."""

    gyro_bias_dph: float = 0.0  # deg/h, 1-sigma per axis
    arw_dpsh: float = 0.0  # deg/sqrt(h)
    accel_bias: float = 0.0  # m/s^2, 1-sigma per axis
    vrw_mpspsh: float = 0.0  # m/s/sqrt(h)
    gyro_scale_ppm: float = 0.0
    accel_scale_ppm: float = 0.0

    def __post_init__(self):
        for name in (
            "gyro_bias_dph",
            "arw_dpsh",
            "accel_bias",
            "vrw_mpspsh",
            "gyro_scale_ppm",
            "accel_scale_ppm",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def icm20602(cls) -> "SensorErrorSpec":
        """Consumer-grade MEMS chip used for the reference experiments."""
        return cls(gyro_bias_dph=200.0, arw_dpsh=0.24, accel_bias=0.01, vrw_mpspsh=3.0)


@dataclass
class TruthEpoch:
    """Exact kinematic state at one sample time."""

    time: float
    vehicle_pos: np.ndarray
    vehicle_heading: float
    wheel_roll: float
    dcm: np.ndarray  # IMU body-to-nav
    imu_pos: np.ndarray
    imu_vel: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray


@dataclass
class TruthSequence:
    """Array-backed sequence of truth epochs."""

    times: np.ndarray
    vehicle_pos: np.ndarray
    vehicle_heading: np.ndarray
    vehicle_vel: np.ndarray
    wheel_roll: np.ndarray
    dcm: np.ndarray  # (N, 3, 3)
    imu_pos: np.ndarray
    imu_vel: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> TruthEpoch:
        return TruthEpoch(
            float(self.times[i]),
            self.vehicle_pos[i],
            float(self.vehicle_heading[i]),
            float(self.wheel_roll[i]),
            self.dcm[i],
            self.imu_pos[i],
            self.imu_vel[i],
            self.gyro[i],
            self.accel[i],
        )

    def imu_heading(self) -> np.ndarray:
        return wrap_angle(self.vehicle_heading + 0.5 * math.pi)


@dataclass
class ImuStream:
    """Array-backed IMU sample stream."""

    times: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> ImuSample:
        return ImuSample(float(self.times[i]), self.gyro[i], self.accel[i])


def _stack33(*cols) -> np.ndarray:
    """Nine (n,) arrays, row-major, into an (n, 3, 3) stack."""
    return np.stack(cols, axis=-1).reshape(-1, 3, 3)


def _batch_skew(v: np.ndarray) -> np.ndarray:
    n = len(v)
    z = np.zeros(n)
    return _stack33(z, -v[:, 2], v[:, 1], v[:, 2], z, -v[:, 0], -v[:, 1], v[:, 0], z)


def _batch_exp(rv: np.ndarray) -> np.ndarray:
    """Rodrigues formula for a batch of small rotation vectors."""
    angle = np.linalg.norm(rv, axis=1)
    small = angle < 1e-12
    safe = np.where(small, 1.0, angle)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    k = _batch_skew(rv)
    kk = np.einsum("nij,njk->nik", k, k)
    return np.eye(3) + a[:, None, None] * k + b[:, None, None] * kk


def _batch_log(c: np.ndarray) -> np.ndarray:
    """Log map for a batch of rotations well away from 180 deg."""
    axis_raw = 0.5 * np.stack(
        [
            c[:, 2, 1] - c[:, 1, 2],
            c[:, 0, 2] - c[:, 2, 0],
            c[:, 1, 0] - c[:, 0, 1],
        ],
        axis=-1,
    )
    tr = np.clip((np.trace(c, axis1=1, axis2=2) - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arccos(tr)
    small = angle < 1e-7
    safe = np.where(small, 1.0, angle)
    factor = np.where(small, 1.0, safe / np.sin(safe))
    return axis_raw * factor[:, None]


def generate_truth(
    profile: TrajectoryProfile,
    g: WheelGeometry,
    rate: float,
    body_mounted: bool = False,
    gravity: float = GRAVITY,
) -> TruthSequence:
    """Integrate the profile into exact vehicle/wheel/IMU kinematics at `rate` Hz.

    With body_mounted=True the IMU follows the vehicle frame instead of the
    rolling wheel (reference case for rotation-modulation comparisons).
    """
    if rate < 50.0:
        raise ValueError("truth generation needs at least 50 Hz")
    dt = 1.0 / rate
    n = int(round(profile.duration() * rate)) + 1
    times = np.arange(n) * dt

    heading = np.empty(n)
    roll = np.empty(n)
    pos = np.empty((n, 3))
    speed = np.empty(n)
    rates = np.empty(n)

    psi = profile.start_heading
    phi_w = 0.0
    p = profile.start_position.copy()
    roll_sign = g.forward_sign  # wheel roll rate = sign * speed / radius
    for k in range(n):
        t = times[k]
        v, psi_dot = profile.state_at(t)
        heading[k] = psi
        roll[k] = phi_w
        pos[k] = p
        speed[k] = v
        rates[k] = psi_dot
        # Midpoint integration to the next sample.
        v_mid, psi_dot_mid = profile.state_at(t + 0.5 * dt)
        psi_mid = psi + 0.5 * dt * psi_dot_mid
        p = p + v_mid * dt * np.array([math.cos(psi_mid), math.sin(psi_mid), 0.0])
        psi += dt * psi_dot_mid
        phi_w += roll_sign * v_mid * dt / g.radius

    vehicle_vel = np.column_stack(
        [speed * np.cos(heading), speed * np.sin(heading), np.zeros(n)]
    )

    zeros = np.zeros(n)
    if body_mounted:
        ch, sh = np.cos(heading), np.sin(heading)
        ones = np.ones(n)
        dcms = _stack33(ch, -sh, zeros, sh, ch, zeros, zeros, zeros, ones)
        gyro = np.column_stack([zeros, zeros, rates])
        lever = np.zeros(3)
    else:
        # C_b^n = Rz(vehicle heading + 90 deg) @ Rx(wheel roll).
        psi_b = heading + 0.5 * math.pi
        ch, sh = np.cos(psi_b), np.sin(psi_b)
        cr, sr = np.cos(roll), np.sin(roll)
        dcms = _stack33(
            ch, -sh * cr, sh * sr, sh, ch * cr, -ch * sr, zeros, sr, cr
        )
        # Heading rate mapped to the rolling body plus wheel spin about body x.
        gyro = np.column_stack([roll_sign * speed / g.radius, rates * sr, rates * cr])
        lever = g.lever_arm
    imu_pos = pos - np.einsum("nij,j->ni", dcms, lever)
    imu_vel = vehicle_vel - np.einsum("nij,nj->ni", dcms, np.cross(gyro, lever))

    # Specific force by central differences of the IMU velocity.
    accel_n = np.gradient(imu_vel, dt, axis=0)
    accel_n[:, 2] -= gravity
    accel = np.einsum("nji,nj->ni", dcms, accel_n)

    return TruthSequence(
        times, pos, wrap_angle(heading), vehicle_vel, roll, dcms, imu_pos, imu_vel, gyro, accel
    )


def synthesize_imu(truth: TruthSequence, gravity: float = GRAVITY) -> ImuStream:
    """Invert the mechanization: IMU samples whose noise-free propagation
    reproduces the truth sequence.

    Sample k covers (t[k-1], t[k]]: the angular rate is the log map of the
    attitude increment, the specific force the velocity increment rotated to
    the mid-interval body frame with gravity removed.
    """
    n = len(truth)
    dt = float(truth.times[1] - truth.times[0])
    c_prev = truth.dcm[:-1]
    rel = np.einsum("nji,njk->nik", c_prev, truth.dcm[1:])
    rv = _batch_log(rel)
    gyro = rv / dt
    c_mid = np.einsum("nij,njk->nik", c_prev, _batch_exp(0.5 * rv))
    dv = np.diff(truth.imu_vel, axis=0) / dt
    dv[:, 2] -= gravity
    accel = np.einsum("nji,nj->ni", c_mid, dv)
    return ImuStream(truth.times[1:].copy(), gyro, accel)


def corrupt(stream: ImuStream, spec: SensorErrorSpec, seed: int):
    """Apply Table-style sensor errors; returns (stream, injected SensorErrors).

    Biases and scale factors are constant per run, drawn from the 1-sigma
    values; white noise has std = random-walk density * sqrt(rate).
    """
    rng = np.random.default_rng(seed)
    n = len(stream)
    dt = float(stream.times[1] - stream.times[0]) if n > 1 else 1.0

    bg = rng.standard_normal(3) * spec.gyro_bias_dph * DEG_PER_HOUR
    ba = rng.standard_normal(3) * spec.accel_bias
    sg = rng.standard_normal(3) * spec.gyro_scale_ppm * 1e-6
    sa = rng.standard_normal(3) * spec.accel_scale_ppm * 1e-6
    gyro_noise_std = spec.arw_dpsh * DEG_PER_SQRT_HOUR / math.sqrt(dt)
    accel_noise_std = spec.vrw_mpspsh * PER_SQRT_HOUR / math.sqrt(dt)

    gyro = stream.gyro * (1.0 + sg) + bg + rng.standard_normal((n, 3)) * gyro_noise_std
    accel = stream.accel * (1.0 + sa) + ba + rng.standard_normal((n, 3)) * accel_noise_std
    injected = SensorErrors(bg, ba, sg, sa)
    return ImuStream(stream.times.copy(), gyro, accel), injected


def inject_lever_arm_error(g: WheelGeometry, dy: float, dz: float) -> WheelGeometry:
    """Geometry whose lever arm is offset by (0, dy, dz) from the truth."""
    return replace(g, lever_arm=g.lever_arm + np.array([0.0, dy, dz]))


def with_static_prefix(profile: TrajectoryProfile, duration: float) -> TrajectoryProfile:
    """Prepend a stationary segment (for static alignment)."""
    static = Segment(duration=duration, speed=0.0)
    return replace(profile, segments=(static,) + tuple(profile.segments))


def named_profile(name: str) -> TrajectoryProfile:
    """Built-in trajectory profiles.

    `test1` is a ~1.2 km loop at 1.39 m/s (small-robot scale), `test5` a
    ~12.2 km loop at 4.70 m/s (car scale); both include a 10 s static lead-in.
    """
    quarter_turn = math.pi / 2.0
    if name == "test1":
        v = 1.39
        leg = Segment(210.0, v)
        turn = Segment(quarter_turn / 0.15, v, heading_rate=0.15)
        profile = TrajectoryProfile((leg, turn) * 4)
    elif name == "test5":
        v = 4.70
        leg = Segment(635.0, v)
        turn = Segment(quarter_turn / 0.1, v, heading_rate=0.1)
        profile = TrajectoryProfile((leg, turn) * 4)
    elif name == "line":
        profile = TrajectoryProfile((Segment(120.0, 1.39),))
    elif name == "circle":
        profile = TrajectoryProfile((Segment(300.0, 1.39, heading_rate=0.05),))
    else:
        raise ValueError(f"unknown profile {name!r}")
    return with_static_prefix(profile, 10.0)
