"""Matplotlib rendering of trajectory reports to image files."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .compat import TrajectoryReport


def write_trajectory_csv(report: TrajectoryReport, path: str) -> None:
    """Delimited dump: one row per recorded state."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "x1", "x2", "p1", "p2"])
        for t, state in zip(report.times, report.states):
            writer.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in state])


def render_trajectory_figure(report: TrajectoryReport, path: str,
                             potential_label: str = "") -> None:
    """Two panels: configuration-space orbit and the conservation summary."""
    fig, (ax_orbit, ax_drift) = plt.subplots(1, 2, figsize=(10, 4.5))

    states = report.states
    ax_orbit.plot(states[:, 0], states[:, 1], lw=0.9, color="#1f4e79")
    ax_orbit.plot(states[0, 0], states[0, 1], "o", ms=5, color="#a33e3e")
    ax_orbit.set_xlabel("$x_1$")
    ax_orbit.set_ylabel("$x_2$")
    ax_orbit.set_title(f"orbit {potential_label}".strip())
    ax_orbit.set_aspect("equal", adjustable="datalim")

    labels = ["H"] + list(report.integral_labels)
    drifts = [report.drift_h] + list(report.drift_f)
    y = np.arange(len(labels))
    ax_drift.barh(y, np.maximum(drifts, 1e-18), color="#4a7d4a")
    ax_drift.set_yticks(y, labels)
    ax_drift.set_xscale("log")
    ax_drift.set_xlabel("max relative drift")
    title = "conservation"
    if report.aborted:
        title += " (aborted)"
    ax_drift.set_title(title)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
