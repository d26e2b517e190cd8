"""Figure rendering for trajectories and check reports.

Figures are written next to the delimited outputs; rendering is optional
and never affects the numeric artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .rch import Trajectory

__all__ = ["render_trajectory", "render_report"]


def render_trajectory(traj: Trajectory, path, title: str = "") -> None:
    """State components plus energy and Casimir drift panels."""
    drift_keys = [k for k in traj.diagnostics if k != "energy"]
    n_panels = 2 + (1 if drift_keys else 0)
    fig, axes = plt.subplots(n_panels, 1, figsize=(8, 2.6 * n_panels), sharex=True)
    axes = np.atleast_1d(axes)

    for i, label in enumerate(traj.state_labels):
        axes[0].plot(traj.times, traj.states[:, i], lw=0.9, label=label)
    axes[0].set_ylabel("state")
    if len(traj.state_labels) <= 9:
        axes[0].legend(loc="upper right", fontsize=7, ncol=3)

    energy = traj.diagnostics.get("energy")
    if energy is not None:
        axes[1].plot(traj.times, energy - energy[0], lw=0.9, color="tab:red")
    axes[1].set_ylabel("energy drift")

    if drift_keys:
        for k in drift_keys:
            v = np.asarray(traj.diagnostics[k])
            axes[2].plot(traj.times, v - v[0], lw=0.9, label=k)
        axes[2].set_ylabel("invariant drift")
        axes[2].legend(loc="upper right", fontsize=7)

    axes[-1].set_xlabel("t")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(report: dict, path, title: str = "") -> None:
    """Bar chart of residuals against tolerances for a check report."""
    rows = []
    if "checks" in report:
        for row in report["checks"]:
            for key in ("residual", "curve"):
                if key in row and isinstance(row[key], dict):
                    rows.append((f"{row.get('label', key)}/{key}",
                                 row[key].get("residual", row[key].get("max_residual", 0.0)),
                                 row[key].get("tolerance")))
    else:
        label = report.get("check", "check")
        rows.append((label, report.get("max_residual", report.get("residual", 0.0)),
                     report.get("tolerance")))

    fig, ax = plt.subplots(figsize=(8, 0.5 * max(4, len(rows))))
    labels = [r[0] for r in rows]
    vals = [max(r[1], 1e-18) for r in rows]
    ax.barh(labels, vals, color="tab:blue", height=0.6)
    for _, _, tol in rows:
        if tol:
            ax.axvline(tol, color="tab:red", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("residual")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
