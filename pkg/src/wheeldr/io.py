"""Bit-exact CSV and config file formats.

All numeric fields are serialized with 9 significant digits so repeated runs
with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import io as _io
import os
from dataclasses import dataclass

import numpy as np

IMU_HEADER = "t,gx,gy,gz,ax,ay,az"
POSE_HEADER = "t,pn,pe,pd,vn,ve,vd,roll,pitch,yaw"
SERIES_HEADER = "t,err_n,err_e,err_d,err_h,err_heading_rad,distance"


class ParseError(ValueError):
    """Malformed input file; carries file, line, and column context."""

    def __init__(self, path, line, column, message):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


@dataclass
class PoseSeries:
    """Rows of a truth/estimate CSV: time, NED position/velocity, euler angles."""

    times: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    euler: np.ndarray  # roll, pitch, yaw columns

    def __len__(self) -> int:
        return len(self.times)


def _fmt(values) -> str:
    return ",".join(f"{v:.9g}" for v in values)


def _read_table(path: str, header: str) -> np.ndarray:
    ncols = header.count(",") + 1
    with open(path, "r") as f:
        first = f.readline().strip()
        if first != header:
            raise ParseError(path, 1, 1, f"expected header {header!r}, got {first!r}")
        rows = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != ncols:
                raise ParseError(path, lineno, 1, f"expected {ncols} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                for col, p in enumerate(parts, start=1):
                    try:
                        float(p)
                    except ValueError:
                        raise ParseError(path, lineno, col, f"not a number: {p!r}") from None
                raise
    if not rows:
        raise ParseError(path, 2, 1, "no data rows")
    return np.asarray(rows)


def write_imu_csv(path: str, times, gyro, accel) -> None:
    buf = _io.StringIO()
    buf.write(IMU_HEADER + "\n")
    for i in range(len(times)):
        buf.write(f"{times[i]:.9g}," + _fmt(gyro[i]) + "," + _fmt(accel[i]) + "\n")
    _atomic_write(path, buf.getvalue())


def read_imu_csv(path: str):
    data = _read_table(path, IMU_HEADER)
    return data[:, 0], data[:, 1:4], data[:, 4:7]


def write_pose_csv(path: str, times, pos, vel, euler) -> None:
    buf = _io.StringIO()
    buf.write(POSE_HEADER + "\n")
    for i in range(len(times)):
        buf.write(
            f"{times[i]:.9g},"
            + _fmt(pos[i])
            + ","
            + _fmt(vel[i])
            + ","
            + _fmt(euler[i])
            + "\n"
        )
    _atomic_write(path, buf.getvalue())


def read_pose_csv(path: str) -> PoseSeries:
    data = _read_table(path, POSE_HEADER)
    return PoseSeries(data[:, 0], data[:, 1:4], data[:, 4:7], data[:, 7:10])


def write_series_csv(path: str, series) -> None:
    buf = _io.StringIO()
    buf.write(SERIES_HEADER + "\n")
    horiz = series.horizontal
    for i in range(len(series)):
        buf.write(
            f"{series.times[i]:.9g},{series.north[i]:.9g},{series.east[i]:.9g},"
            f"{series.down[i]:.9g},{horiz[i]:.9g},{series.heading[i]:.9g},"
            f"{series.distance[i]:.9g}\n"
        )
    _atomic_write(path, buf.getvalue())


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value config; blank lines and '#' comments allowed."""
    entries: dict[str, str] = {}
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value.strip()
    return entries


def _atomic_write(path: str, text: str) -> None:
    """Write via a temp file so failures never leave partial output."""
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
