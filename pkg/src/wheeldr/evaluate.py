"""Error series against a reference trajectory and drift-rate statistics.

The position metric is the segmented drift rate: for each whole multiple of
the segment length traveled from the start, the maximum horizontal error seen
so far divided by that distance; reported as MEAN and STD over segments.
Heading is reported as MAX and RMSE in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import angle_diff, wrap_angle

DEFAULT_SEGMENT_LENGTH = 100.0  # m


class NoOverlapError(ValueError):
    """Estimate and reference time spans do not overlap."""


class TooShortError(ValueError):
    """Trajectory shorter than one segment length."""


class EmptySeriesError(ValueError):
    """No epochs to evaluate."""


@dataclass
class ErrorSeries:
    """Per-epoch navigation errors and cumulative traveled distance."""

    times: np.ndarray
    north: np.ndarray
    east: np.ndarray
    down: np.ndarray
    heading: np.ndarray  # rad, wrapped
    distance: np.ndarray  # m, from reference speed

    @property
    def horizontal(self) -> np.ndarray:
        return np.hypot(self.north, self.east)

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class DriftReport:
    """Segmented drift rates plus heading statistics."""

    segment_rates: list[float]
    mean: float  # %
    std: float  # %
    heading_max: float  # deg
    heading_rmse: float  # deg
    segment_length: float = DEFAULT_SEGMENT_LENGTH

    def to_text(self) -> str:
        lines = [
            f"segment_length_m={self.segment_length:.9g}",
            f"segments={len(self.segment_rates)}",
            f"drift_mean_pct={self.mean:.9g}",
            f"drift_std_pct={self.std:.9g}",
            f"heading_max_deg={self.heading_max:.9g}",
            f"heading_rmse_deg={self.heading_rmse:.9g}",
            "segment_rates_pct=" + ",".join(f"{r:.9g}" for r in self.segment_rates),
        ]
        return "\n".join(lines) + "\n"

    CSV_HEADER = "segment_length_m,segments,drift_mean_pct,drift_std_pct,heading_max_deg,heading_rmse_deg"

    def to_csv_row(self) -> str:
        return (
            f"{self.segment_length:.9g},{len(self.segment_rates)},{self.mean:.9g},"
            f"{self.std:.9g},{self.heading_max:.9g},{self.heading_rmse:.9g}"
        )


def align_and_diff(
    est_times: np.ndarray,
    est_pos: np.ndarray,
    est_heading: np.ndarray,
    ref_times: np.ndarray,
    ref_pos: np.ndarray,
    ref_vel: np.ndarray,
    ref_heading: np.ndarray,
    est_yaw_kind: str = "imu",
    ref_yaw_kind: str = "vehicle",
) -> ErrorSeries:
    """Interpolate the reference to the estimate timestamps and difference.

    Headings are compared as vehicle headings: IMU headings are first shifted
    by the fixed 90 deg wheel-mount offset. Traveled distance is integrated
    from the reference velocity.
    """
    t0 = max(est_times[0], ref_times[0])
    t1 = min(est_times[-1], ref_times[-1])
    if t1 <= t0:
        raise NoOverlapError("estimate and reference do not overlap in time")
    keep = (est_times >= t0) & (est_times <= t1)
    t = est_times[keep]

    ref_p = np.column_stack(
        [np.interp(t, ref_times, ref_pos[:, i]) for i in range(3)]
    )
    # Interpolate heading through its unwrapped representation.
    ref_h_unwrapped = np.unwrap(ref_heading)
    ref_h = np.interp(t, ref_times, ref_h_unwrapped)

    est_h = np.asarray(est_heading, dtype=float)[keep]
    if est_yaw_kind == "imu":
        est_h = vehicle_heading_from_imu_array(est_h)
    if ref_yaw_kind == "imu":
        ref_h = ref_h - 0.5 * math.pi

    diff = est_pos[keep] - ref_p
    speed = np.linalg.norm(ref_vel[:, :2], axis=1)
    ref_speed = np.interp(t, ref_times, speed)
    distance = np.concatenate(
        [[0.0], np.cumsum(0.5 * (ref_speed[1:] + ref_speed[:-1]) * np.diff(t))]
    )
    return ErrorSeries(
        times=t,
        north=diff[:, 0],
        east=diff[:, 1],
        down=diff[:, 2],
        heading=angle_diff(est_h, ref_h),
        distance=distance,
    )


def vehicle_heading_from_imu_array(psi_b: np.ndarray) -> np.ndarray:
    return wrap_angle(np.asarray(psi_b) - 0.5 * math.pi)


def drift_rate(series: ErrorSeries, l: float = DEFAULT_SEGMENT_LENGTH) -> DriftReport:
    """Cumulative-from-start segmented drift rates with heading stats attached."""
    if len(series) == 0:
        raise EmptySeriesError("empty error series")
    total = float(series.distance[-1])
    if total < l:
        raise TooShortError(f"traveled {total:.1f} m < segment length {l} m")
    horiz = series.horizontal
    rates = []
    k = 1
    while k * l <= total:
        d = k * l
        mask = series.distance <= d
        rates.append(float(horiz[mask].max()) / d * 100.0)
        k += 1
    h_max, h_rmse = heading_stats(series)
    return DriftReport(
        segment_rates=rates,
        mean=float(np.mean(rates)),
        std=float(np.std(rates)),
        heading_max=h_max,
        heading_rmse=h_rmse,
        segment_length=l,
    )


def heading_stats(series: ErrorSeries):
    """(MAX, RMSE) of the wrapped heading error, in degrees."""
    if len(series) == 0:
        raise EmptySeriesError("empty error series")
    err = np.degrees(series.heading)
    return float(np.abs(err).max()), float(np.sqrt(np.mean(err**2)))


def compare_models(reports: dict[str, DriftReport]) -> dict:
    """Tabulate per-model statistics and pairwise MEAN-drift ratios.

    Flags disparity when any pairwise ratio leaves [0.5, 2.0].
    """
    names = list(reports)
    stats = {
        name: {
            "drift_mean_pct": r.mean,
            "drift_std_pct": r.std,
            "heading_max_deg": r.heading_max,
            "heading_rmse_deg": r.heading_rmse,
        }
        for name, r in reports.items()
    }
    ratios = {}
    disparity = False
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            denom = reports[b].mean
            ratio = math.inf if denom == 0.0 else reports[a].mean / denom
            ratios[f"{a}/{b}"] = ratio
            if not 0.5 <= ratio <= 2.0:
                disparity = True
    return {"models": stats, "mean_ratios": ratios, "disparity": disparity}
