"""Figure rendering for the report-producing commands.

Every function writes one PNG next to the delimited output it
illustrates.  Rendering uses the non-interactive backend and fixed
metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .emgproc import MUSCLES
from .estimator import RmsReport

DPI = 110
# Matplotlib stamps a version string into PNG metadata by default;
# pinning the field keeps output bytes stable across library updates.
_METADATA = {"Software": "ergotwin"}


def _save(fig: plt.Figure, path: str) -> None:
    fig.savefig(path, dpi=DPI, metadata=_METADATA)
    plt.close(fig)


def loss_curve_figure(curve: list[float], path: str) -> None:
    """Per-epoch mean training loss on a log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    epochs = np.arange(1, len(curve) + 1)
    ax.plot(epochs, curve, color="tab:blue", lw=1.2)
    if len(curve) > 0 and min(curve) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.set_title("training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def section_figure(report: RmsReport, path: str) -> None:
    """Bar chart of RMS error per test section, one panel per output."""
    names = [n for n in RmsReport.SECTION_ORDER if n in report.sections]
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.6))
    for ax, j, label in zip(axes, (0, 1),
                            ("stiffness RMS (N*m/rad)",
                             "orientation RMS (deg)")):
        vals = [report.sections[n][j] for n in names]
        ax.bar(range(len(names)), vals, color="tab:blue", width=0.6)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names)
        ax.set_ylabel(label)
        ax.grid(True, axis="y", alpha=0.3)
    fig.suptitle("estimation error by test section")
    fig.tight_layout()
    _save(fig, path)


def sweep_figure(seeds: list[int], section_rms: np.ndarray, path: str) -> None:
    """Section RMS trajectories across seeds with the median overlaid.

    ``section_rms`` has shape (n_seeds, 3 sections, 2 outputs).
    """
    section_rms = np.asarray(section_rms, dtype=float)
    xs = np.arange(3)
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.6))
    for ax, j, label in zip(axes, (0, 1),
                            ("stiffness RMS (N*m/rad)",
                             "orientation RMS (deg)")):
        for row in section_rms[:, :, j]:
            ax.plot(xs, row, color="tab:gray", alpha=0.4, lw=0.8)
        ax.plot(xs, np.median(section_rms[:, :, j], axis=0),
                color="tab:red", lw=2.0, marker="o", label="median")
        ax.set_xticks(xs)
        ax.set_xticklabels(["first", "second", "third"])
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper left")
    fig.suptitle(f"estimation error over the session ({len(seeds)} seeds)")
    fig.tight_layout()
    _save(fig, path)


def distribution_figure(distribution: np.ndarray, path: str) -> None:
    """Session-mean effort distribution as one bar per muscle."""
    values = np.asarray(distribution, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.bar(range(len(MUSCLES)), values, color="tab:blue", width=0.6)
    ax.set_xticks(range(len(MUSCLES)))
    ax.set_xticklabels(MUSCLES, rotation=30, ha="right")
    ax.set_ylabel("mean effort share")
    ax.set_title("session mean effort distribution")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
