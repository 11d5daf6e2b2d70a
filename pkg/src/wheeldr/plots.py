"""Report figures rendered to files alongside the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_error_series(series_by_model: dict, path: str) -> str:
    """North/east position error and heading error vs time, one line per model."""
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    for name, series in series_by_model.items():
        t = series.times - series.times[0]
        axes[0].plot(t, series.north, label=name)
        axes[1].plot(t, series.east, label=name)
        axes[2].plot(t, np.degrees(series.heading), label=name)
    axes[0].set_ylabel("north error [m]")
    axes[1].set_ylabel("east error [m]")
    axes[2].set_ylabel("heading error [deg]")
    axes[2].set_xlabel("time [s]")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_drift_rates(reports_by_model: dict, path: str) -> str:
    """Segmented drift rate as a function of traveled distance."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, report in reports_by_model.items():
        d = np.arange(1, len(report.segment_rates) + 1) * report.segment_length
        ax.plot(d, report.segment_rates, marker="o", markersize=3, label=name)
    ax.set_xlabel("traveled distance [m]")
    ax.set_ylabel("drift rate [%]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trajectory(est_pos, ref_pos, path: str, label: str = "estimate") -> str:
    """Top-down east/north track of estimate vs reference."""
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(ref_pos[:, 1], ref_pos[:, 0], "k-", lw=1, label="reference")
    ax.plot(est_pos[:, 1], est_pos[:, 0], "r--", lw=1, label=label)
    ax.set_xlabel("east [m]")
    ax.set_ylabel("north [m]")
    ax.axis("equal")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
