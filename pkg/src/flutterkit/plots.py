"""Figure rendering for flutter sweeps and stabilization diagrams.

Backend is forced to Agg so report generation works headless; every function
writes PNG files into the run's output directory and returns the paths.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pkflutter import OnsetReport, PkSolution
from .tracking import StabilizationDiagram

__all__ = ["plot_trajectories", "plot_stabilization"]

MODE_LABELS = ("bending branch", "torsion branch")
MODE_COLORS = ("tab:blue", "tab:red")


def _mark_onsets(ax, onset: OnsetReport | None):
    if onset is None:
        return
    if onset.flutter_speed_ms is not None:
        ax.axvline(onset.flutter_speed_ms, color="k", linestyle="--", linewidth=1.0,
                   label=f"flutter {onset.flutter_speed_ms:.2f} m/s")
    if onset.divergence_speed_ms is not None:
        ax.axvline(onset.divergence_speed_ms, color="gray", linestyle=":", linewidth=1.0,
                   label=f"divergence {onset.divergence_speed_ms:.2f} m/s")


def _speed_figure(solution, values, ylabel, title, path, onset=None, hline=None):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for j in range(values.shape[1]):
        ax.plot(solution.speeds, values[:, j], color=MODE_COLORS[j % len(MODE_COLORS)],
                marker=".", markersize=3, linewidth=1.2, label=MODE_LABELS[j % len(MODE_LABELS)])
    if hline is not None:
        ax.axhline(hline, color="k", linewidth=0.6)
    _mark_onsets(ax, onset)
    ax.set_xlabel("airspeed (m/s)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trajectories(
    solution: PkSolution, out_dir: str, onset: OnsetReport | None = None
) -> list[str]:
    """Frequency, damping, eigenvalue parts, and a polar locus versus speed."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    freqs = solution.frequencies_hz()
    zetas = solution.damping_ratios()
    re_l = solution.lam.real
    im_l = np.abs(solution.lam.imag)

    paths.append(_speed_figure(
        solution, freqs, "frequency (Hz)", "Modal frequency vs airspeed",
        os.path.join(out_dir, "frequency_vs_speed.png"), onset))
    paths.append(_speed_figure(
        solution, zetas, "damping ratio", "Modal damping vs airspeed",
        os.path.join(out_dir, "damping_vs_speed.png"), onset, hline=0.0))
    paths.append(_speed_figure(
        solution, re_l, "Re(lambda) (1/s)", "Eigenvalue real part vs airspeed",
        os.path.join(out_dir, "real_part_vs_speed.png"), onset, hline=0.0))
    paths.append(_speed_figure(
        solution, im_l, "Im(lambda) (rad/s)", "Eigenvalue imaginary part vs airspeed",
        os.path.join(out_dir, "imag_part_vs_speed.png"), onset))

    fig = plt.figure(figsize=(5.2, 5.2))
    ax = fig.add_subplot(projection="polar")
    for j in range(solution.lam.shape[1]):
        lam = solution.lam[:, j]
        ax.plot(np.angle(lam), np.abs(lam), color=MODE_COLORS[j % len(MODE_COLORS)],
                marker=".", markersize=3, linewidth=1.0, label=MODE_LABELS[j % len(MODE_LABELS)])
    ax.set_title("Eigenvalue locus over the speed sweep", pad=18)
    ax.legend(loc="lower left", fontsize=8, bbox_to_anchor=(-0.1, -0.12))
    fig.tight_layout()
    locus_path = os.path.join(out_dir, "eigenvalue_locus.png")
    fig.savefig(locus_path, dpi=150)
    plt.close(fig)
    paths.append(locus_path)
    return paths


def plot_stabilization(diagram: StabilizationDiagram, out_dir: str) -> str:
    """Classic order-vs-frequency scatter with stability encoded in the marker."""
    os.makedirs(out_dir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    seen = set()

    def put(x, y, marker, color, label):
        key = label if label not in seen else None
        if key:
            seen.add(label)
        ax.scatter([x], [y], marker=marker, color=color, s=18,
                   label=key, zorder=3)

    for e in diagram.entries:
        if e.damp_stable:
            put(e.mode.frequency_hz, e.order, "o", "tab:green", "frequency and damping stable")
        elif e.freq_stable:
            put(e.mode.frequency_hz, e.order, "s", "tab:orange", "frequency stable")
        else:
            put(e.mode.frequency_hz, e.order, "x", "tab:gray", "new pole")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("model order")
    title = "Stabilization diagram"
    if diagram.method:
        title += f" ({diagram.method})"
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if seen:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "stabilization_diagram.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
