"""Command-line entry points: simulate, run, evaluate, compare."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io, plots
from .config import RunConfig, config_from_entries, load_config
from .evaluate import align_and_diff, compare_models, drift_rate
from .io import ConfigError, ParseError
from .measurements import MODEL_KINDS
from .pipeline import DivergenceError, run_pipeline
from .simulate import (
    SensorErrorSpec,
    corrupt,
    generate_truth,
    named_profile,
    synthesize_imu,
)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, help="random seed / run identifier")
    p.add_argument("--out", default=".", help="output directory")


def _build_config(args, extra: dict | None = None) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides: dict[str, str] = dict(extra or {})
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "model", None):
        overrides["model"] = args.model
    if getattr(args, "lever_arm_error", None):
        overrides["lever_arm_error"] = args.lever_arm_error
    for flag in getattr(args, "flag", None) or []:
        if flag == "eq18":
            overrides["eq18"] = "true"
        elif flag == "gate":
            overrides["gate"] = "true"
        elif flag == "no-gate":
            overrides["gate"] = "false"
    return config_from_entries(overrides, cfg)


class _OutputTracker:
    """Removes files already written when a command fails midway."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            if os.path.exists(p):
                os.remove(p)


def _euler_cols(roll, pitch, yaw):
    return np.column_stack([roll, pitch, yaw])


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    profile = named_profile(args.profile)
    geom = cfg.geometry
    truth = generate_truth(profile, geom, cfg.imu_rate, gravity=cfg.gravity)
    stream = synthesize_imu(truth, cfg.gravity)
    if not args.ideal:
        spec = SensorErrorSpec(
            gyro_bias_dph=cfg.gyro_bias_dph,
            arw_dpsh=cfg.arw_dpsh,
            accel_bias=cfg.accel_bias,
            vrw_mpspsh=cfg.vrw_mpspsh,
        )
        stream, _ = corrupt(stream, spec, cfg.seed)

    out = _OutputTracker(args.out)
    try:
        io.write_imu_csv(out.path("imu.csv"), stream.times, stream.gyro, stream.accel)
        zeros = np.zeros(len(truth))
        io.write_pose_csv(
            out.path("truth_vehicle.csv"),
            truth.times,
            truth.vehicle_pos,
            truth.vehicle_vel,
            _euler_cols(zeros, zeros, truth.vehicle_heading),
        )
        # IMU truth: yaw column is the IMU heading; roll is the wheel roll angle.
        io.write_pose_csv(
            out.path("truth_imu.csv"),
            truth.times,
            truth.imu_pos,
            truth.imu_vel,
            _euler_cols(truth.wheel_roll, zeros, truth.imu_heading()),
        )
    except Exception:
        out.cleanup()
        raise
    print(f"wrote imu.csv, truth_vehicle.csv, truth_imu.csv to {args.out}")
    return 0


def _write_run_outputs(out: _OutputTracker, prefix: str, record, do_plot: bool, ref=None):
    io.write_pose_csv(
        out.path(f"{prefix}estimate.csv"),
        record.times,
        record.pos,
        record.vel,
        record.euler,
    )
    io.write_series_csv(out.path(f"{prefix}series.csv"), record.series)
    with open(out.path(f"{prefix}report.txt"), "w") as f:
        f.write(record.report.to_text())
    with open(out.path(f"{prefix}report.csv"), "w") as f:
        f.write(record.report.CSV_HEADER + "\n" + record.report.to_csv_row() + "\n")
    if do_plot:
        plots.plot_error_series(
            {prefix.rstrip("_") or "estimate": record.series},
            out.path(f"{prefix}errors.png"),
        )
        plots.plot_drift_rates(
            {prefix.rstrip("_") or "estimate": record.report},
            out.path(f"{prefix}drift.png"),
        )
        if ref is not None:
            plots.plot_trajectory(record.pos, ref.pos, out.path(f"{prefix}track.png"))


def cmd_run(args) -> int:
    cfg = _build_config(args)
    times, gyro, accel = io.read_imu_csv(args.imu)
    from .simulate import ImuStream

    stream = ImuStream(times, gyro, accel)
    ref = io.read_pose_csv(args.ref)
    out = _OutputTracker(args.out)
    try:
        record = run_pipeline(cfg, stream, ref, ref_yaw_kind=args.ref_yaw)
        with open(out.path("run_config.txt"), "w") as f:
            f.write(cfg.snapshot())
        _write_run_outputs(out, "", record, args.plot, ref)
    except Exception:
        out.cleanup()
        raise
    r = record.report
    print(
        f"model={cfg.model} drift MEAN={r.mean:.3f}% STD={r.std:.3f}% "
        f"heading MAX={r.heading_max:.2f} deg RMSE={r.heading_rmse:.2f} deg "
        f"({record.updates_applied} updates, {record.updates_gated} gated, "
        f"{record.elapsed:.1f} s)"
    )
    return 0


def cmd_evaluate(args) -> int:
    est = io.read_pose_csv(args.est)
    ref = io.read_pose_csv(args.ref)
    series = align_and_diff(
        est.times,
        est.pos,
        est.euler[:, 2],
        ref.times,
        ref.pos,
        ref.vel,
        ref.euler[:, 2],
        est_yaw_kind=args.est_yaw,
        ref_yaw_kind=args.ref_yaw,
    )
    report = drift_rate(series, args.segment_length)
    out = _OutputTracker(args.out)
    try:
        io.write_series_csv(out.path("series.csv"), series)
        with open(out.path("report.txt"), "w") as f:
            f.write(report.to_text())
        with open(out.path("report.csv"), "w") as f:
            f.write(report.CSV_HEADER + "\n" + report.to_csv_row() + "\n")
        if args.plot:
            plots.plot_error_series({"estimate": series}, out.path("errors.png"))
            plots.plot_drift_rates({"estimate": report}, out.path("drift.png"))
    except Exception:
        out.cleanup()
        raise
    print(report.to_text(), end="")
    return 0


def cmd_compare(args) -> int:
    cfg = _build_config(args)
    times, gyro, accel = io.read_imu_csv(args.imu)
    from .simulate import ImuStream

    stream = ImuStream(times, gyro, accel)
    ref = io.read_pose_csv(args.ref)
    out = _OutputTracker(args.out)
    try:
        records = {}
        for model in MODEL_KINDS:
            from dataclasses import replace

            records[model] = run_pipeline(
                replace(cfg, model=model), stream, ref, ref_yaw_kind=args.ref_yaw
            )
            _write_run_outputs(out, f"{model}_", records[model], False)
        reports = {m: r.report for m, r in records.items()}
        comparison = compare_models(reports)
        lines = [f"seed={cfg.seed}"]
        for model, stats in comparison["models"].items():
            for key, value in stats.items():
                lines.append(f"{model}.{key}={value:.9g}")
        for pair, ratio in comparison["mean_ratios"].items():
            lines.append(f"ratio.{pair}={ratio:.9g}")
        lines.append(f"disparity={'true' if comparison['disparity'] else 'false'}")
        with open(out.path("comparison.txt"), "w") as f:
            f.write("\n".join(lines) + "\n")
        if args.plot:
            plots.plot_error_series(
                {m: r.series for m, r in records.items()}, out.path("errors.png")
            )
            plots.plot_drift_rates(reports, out.path("drift.png"))
    except Exception:
        out.cleanup()
        raise
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wheeldr",
        description="Wheel-mounted IMU dead reckoning: simulate, run, evaluate, compare.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate simulated IMU and truth CSVs")
    p.add_argument("--profile", required=True, help="test1, test5, line, or circle")
    p.add_argument("--ideal", action="store_true", help="skip sensor error injection")
    _add_config_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run one measurement model over an IMU log")
    p.add_argument("--imu", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument("--ref-yaw", choices=("imu", "vehicle"), default="imu")
    p.add_argument("--lever-arm-error", metavar="DY,DZ")
    p.add_argument("--flag", action="append", choices=("eq18", "gate", "no-gate"))
    p.add_argument("--plot", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="compare an estimate CSV against a reference")
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--est-yaw", choices=("imu", "vehicle"), default="imu")
    p.add_argument("--ref-yaw", choices=("imu", "vehicle"), default="vehicle")
    p.add_argument("--segment-length", type=float, default=100.0)
    p.add_argument("--plot", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="run all three models on one dataset")
    p.add_argument("--imu", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--ref-yaw", choices=("imu", "vehicle"), default="imu")
    p.add_argument("--lever-arm-error", metavar="DY,DZ")
    p.add_argument("--flag", action="append", choices=("eq18", "gate", "no-gate"))
    p.add_argument("--plot", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
