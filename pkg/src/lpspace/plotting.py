"""Figure rendering for the CLI report paths.

All functions write PNG (or whatever the file suffix selects) straight to
disk with the Agg backend; nothing opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_trajectory_figure", "save_grid_heatmap", "save_count_slices"]


def save_trajectory_figure(path: str, trajectories, title: str = "") -> None:
    """3-D view plus the three plane projections of one or more trajectories.

    ``trajectories`` is a list of (label, states) with states shaped (N, 6).
    """
    fig = plt.figure(figsize=(9, 7))
    ax3d = fig.add_subplot(2, 2, 1, projection="3d")
    axxy = fig.add_subplot(2, 2, 2)
    axxz = fig.add_subplot(2, 2, 3)
    axyz = fig.add_subplot(2, 2, 4)
    for label, states in trajectories:
        s = np.asarray(states)
        ax3d.plot(s[:, 0], s[:, 1], s[:, 2], lw=0.8, label=label)
        axxy.plot(s[:, 0], s[:, 1], lw=0.8)
        axxz.plot(s[:, 0], s[:, 2], lw=0.8)
        axyz.plot(s[:, 1], s[:, 2], lw=0.8)
    ax3d.set_xlabel("x")
    ax3d.set_ylabel("y")
    ax3d.set_zlabel("z")
    if len(trajectories) > 1:
        ax3d.legend(fontsize=7)
    for ax, xl, yl in ((axxy, "x", "y"), (axxz, "x", "z"), (axyz, "y", "z")):
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.grid(alpha=0.3)
        ax.set_aspect("equal", adjustable="datalim")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_grid_heatmap(path: str, a1, a2, values, title: str = "", cbar_label: str = "") -> None:
    """Heatmap of a scalar over an (alpha1, alpha2) grid."""
    fig, ax = plt.subplots(figsize=(6, 5))
    v = np.asarray(values, dtype=float)
    mesh = ax.pcolormesh(np.asarray(a1), np.asarray(a2), v.T, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=cbar_label)
    ax.set_xlabel("alpha1")
    ax.set_ylabel("alpha2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_count_slices(path: str, a1, a2, a34, counts, title: str = "") -> None:
    """Root-count maps, one panel per alpha3*alpha4 slice (up to 6 panels)."""
    counts = np.asarray(counts)
    picks = np.linspace(0, len(a34) - 1, min(6, len(a34))).astype(int)
    fig, axes = plt.subplots(2, 3, figsize=(12, 7), squeeze=False)
    for ax, idx in zip(axes.ravel(), picks):
        mesh = ax.pcolormesh(
            np.asarray(a1), np.asarray(a2), counts[:, :, idx].T, shading="nearest", vmin=0, vmax=4
        )
        ax.set_title(f"a3*a4 = {a34[idx]:.3g}", fontsize=9)
        ax.set_xlabel("alpha1")
        ax.set_ylabel("alpha2")
    fig.colorbar(mesh, ax=axes.ravel().tolist(), label="real nonzero roots")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
