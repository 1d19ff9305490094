"""Figures for a finished run, written next to the CSV files.

Uses the object API (``matplotlib.figure.Figure``) so no GUI backend or
global pyplot state is involved; safe inside worker processes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}

LEADER_COLOR = "#c0392b"
FOLLOWER_CMAP = "viridis"


def _colors(n_followers: int):
    from matplotlib import colormaps

    cmap = colormaps[FOLLOWER_CMAP]
    return [cmap(x) for x in np.linspace(0.0, 0.85, max(n_followers, 1))]


def plot_trajectories(traj, graph, path) -> Path:
    """Agent paths in the plane, with the final formation's sensing edges."""
    path = Path(path)
    leaders = set(graph.leaders)
    colors = iter(_colors(len(graph.followers)))
    with rc_context(STYLE):
        fig = Figure(figsize=(4.5, 4.0))
        ax = fig.add_subplot()
        final = traj.positions(len(traj) - 1)
        for i, j in sorted(graph.edges):
            a, b = final[i - 1], final[j - 1]
            ax.plot([a[0], b[0]], [a[1], b[1]], color="0.6", lw=0.7, zorder=1)
        for i in graph.nodes:
            xy = traj.states[:, 2 * i - 2 : 2 * i]
            c = LEADER_COLOR if i in leaders else next(colors)
            ax.plot(xy[:, 0], xy[:, 1], color=c, zorder=2, label=f"agent {i}")
            ax.plot(*xy[0], "o", color=c, mfc="none", ms=4, zorder=3)
            marker = "s" if i in leaders else "^"
            ax.plot(*xy[-1], marker, color=c, ms=5, zorder=3)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title("Agent trajectories (o start, final formation drawn)")
        ax.legend(loc="best", ncol=2)
        fig.tight_layout()
        fig.savefig(path)
    return path


def plot_control_inputs(traj, graph, path) -> Path:
    """Both components of every follower's control input over time."""
    path = Path(path)
    colors = _colors(len(graph.followers))
    with rc_context(STYLE):
        fig = Figure(figsize=(5.0, 4.0))
        ax_x, ax_y = fig.subplots(2, 1, sharex=True)
        for c, i in zip(colors, graph.followers):
            ax_x.plot(traj.times, traj.inputs[:, 2 * i - 2], color=c, label=f"agent {i}")
            ax_y.plot(traj.times, traj.inputs[:, 2 * i - 1], color=c)
        ax_x.set_ylabel("u_x [m/s]")
        ax_y.set_ylabel("u_y [m/s]")
        ax_y.set_xlabel("t [s]")
        ax_x.legend(loc="upper right", ncol=3)
        ax_x.set_title("Control inputs")
        fig.tight_layout()
        fig.savefig(path)
    return path


def plot_tracking_error(errors, path) -> Path:
    path = Path(path)
    with rc_context(STYLE):
        fig = Figure(figsize=(5.0, 3.0))
        ax = fig.add_subplot()
        vals = np.maximum(errors.values, np.finfo(float).tiny)
        ax.semilogy(errors.times, vals, color="k")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("|p_f - p_f*| [m]")
        ax.set_title("Follower tracking error")
        fig.tight_layout()
        fig.savefig(path)
    return path


def render_report(result, out_dir) -> dict[str, Path]:
    """Render all figures for a :class:`RunResult` into ``out_dir``."""
    out = Path(out_dir)
    g = result.certification.laplacian.graph
    return {
        "trajectory_plot": plot_trajectories(result.trajectory, g, out / "trajectories.png"),
        "control_plot": plot_control_inputs(result.trajectory, g, out / "control_inputs.png"),
        "error_plot": plot_tracking_error(result.errors, out / "tracking_error.png"),
    }
