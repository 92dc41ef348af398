"""Figure rendering for the CLI report paths.

Each function takes the already-computed data (the same objects the CSV
emitters consume) and writes a PNG next to the delimited output.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import NoiseSweepResult, RolloutTrace, VectorFieldTable  # noqa: E402


def plot_training_curves(metrics_csv, out_png) -> None:
    with open(metrics_csv) as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return
    it = [int(r["iteration"]) for r in rows]
    rew = [float(r["mean_episode_reward"]) for r in rows]
    succ = [float(r["success_rate"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(it, rew)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("mean episode reward")
    ax2.plot(it, succ)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("success rate")
    ax2.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)


def plot_noise_sweep(result: NoiseSweepResult, out_png, label: str = "") -> None:
    m = np.array(result.mean_norm)
    s = np.array(result.std_norm)
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(result.levels, m, marker="o", label=label or None)
    ax.fill_between(result.levels, np.clip(m - s, 0, 1), np.clip(m + s, 0, 1),
                    alpha=0.25)
    ax.set_xlabel("observation noise magnitude")
    ax.set_ylabel("normalized reward")
    ax.set_ylim(-0.05, 1.05)
    if label:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)


def plot_vector_field(table: VectorFieldTable, out_png,
                      trace: RolloutTrace | None = None) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    ax.quiver(table.v1, table.v2, table.f1, table.f2, color="0.5",
              angles="xy", width=0.003)
    if trace is not None:
        v1 = [r["velocities"][0][0] for r in trace.records]
        v2 = [r["velocities"][1][0] for r in trace.records]
        ax.plot(v1, v2, color="crimson", lw=1.5)
    lo, hi = float(table.v1.min()), float(table.v1.max())
    ax.plot([lo, hi], [lo, hi], ls=":", color="0.8")
    ax.set_xlabel("velocity, agent 0")
    ax.set_ylabel("velocity, agent 1")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)


def plot_trace(trace: RolloutTrace, out_png, statics=None, goals=None) -> None:
    """Workspace trajectories; walls and goals drawn when provided."""
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    if statics is not None:
        segs = np.asarray(statics.segments, dtype=float).reshape(-1, 5)
        for ax_, ay, bx, by, _t in segs:
            ax.plot([ax_, bx], [ay, by], color="k", lw=2)
    if goals is not None:
        for g in np.atleast_2d(goals):
            ax.plot(g[0], g[1], marker="*", ms=12, color="seagreen")
    for i, color in enumerate(("tab:blue", "tab:orange")):
        xs = [r["positions"][i][0] for r in trace.records]
        ys = [r["positions"][i][1] for r in trace.records]
        ax.plot(xs, ys, color=color, lw=1.2, label=f"agent {i}")
        if xs:
            ax.plot(xs[0], ys[0], marker="o", color=color)
    ax.legend(loc="best", fontsize=8)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
