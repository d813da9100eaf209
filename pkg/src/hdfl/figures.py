"""SVG figure rendering for the CLI report paths.

CSV files are the source of truth; these charts are companions written
next to them.  Rendering is deterministic (fixed hash salt, no embedded
timestamps) so repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hdfl"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import PsnrStudy, SimilarityReport  # noqa: E402
from .federation import RoundMetrics  # noqa: E402
from .privacy import NoiseLedgerEntry  # noqa: E402

__all__ = [
    "save_accuracy_figure",
    "save_noise_curves_figure",
    "save_similarity_figure",
    "save_reconstruction_figure",
]

_SAVE_ARGS = {"format": "svg", "metadata": {"Date": None}}


def save_accuracy_figure(metrics: list[RoundMetrics], path: str | Path) -> None:
    """Test accuracy per communication round."""
    rounds = [m.round_index for m in metrics]
    values = [m.test_accuracy for m in metrics]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rounds, values, marker="o", color="tab:blue")
    ax.set_xlabel("communication round")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(f"global model accuracy ({metrics[0].mode})")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_ARGS)
    plt.close(fig)


def save_noise_curves_figure(
    curves: dict[int, list[NoiseLedgerEntry]], path: str | Path
) -> None:
    """Required vs added client noise per round, one panel per client count."""
    fig, axes = plt.subplots(
        1, len(curves), figsize=(5 * len(curves), 4), sharey=True, squeeze=False
    )
    for ax, (clients, entries) in zip(axes[0], sorted(curves.items())):
        rounds = [e.round_index for e in entries]
        ax.plot(rounds, [e.required_var for e in entries], label="required", color="tab:red")
        ax.plot(
            rounds,
            [e.incremental_var for e in entries],
            label="added",
            color="tab:green",
            linestyle="--",
        )
        ax.plot(
            rounds,
            [e.cumulative_var for e in entries],
            label="carried over",
            color="tab:gray",
            linestyle=":",
        )
        ax.set_title(f"{clients} clients")
        ax.set_xlabel("communication round")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("noise variance")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_ARGS)
    plt.close(fig)


def save_similarity_figure(report: SimilarityReport, path: str | Path) -> None:
    """Matrix view: per-client clouds on the diagonal, cross-client
    similarity histograms below it, raw-distance histograms above."""
    n = len(report.clouds)
    fig, axes = plt.subplots(n, n, figsize=(2.6 * n, 2.6 * n), squeeze=False)
    for i in range(n):
        for j in range(n):
            ax = axes[i][j]
            if i == j:
                cloud = report.clouds[i]
                ax.scatter(cloud[:, 0], cloud[:, 1], s=4, alpha=0.4, color="tab:blue")
                ax.set_ylim(-1.05, 1.05)
            elif i > j:
                edges, masses = report.similarity_hists[(j, i)]
                ax.bar(edges[:-1], masses, width=np.diff(edges), align="edge", color="tab:orange")
            else:
                edges, masses = report.distance_hists[(i, j)]
                ax.bar(edges[:-1], masses, width=np.diff(edges), align="edge", color="tab:green")
            if i == n - 1:
                ax.set_xlabel(f"client {j}", fontsize=8)
            if j == 0:
                ax.set_ylabel(f"client {i}", fontsize=8)
            ax.tick_params(labelsize=6)
    fig.suptitle("distance vs similarity (diag), cross-client similarity (lower) / distance (upper)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_ARGS)
    plt.close(fig)


def save_reconstruction_figure(
    signal: np.ndarray,
    reconstructions: list[np.ndarray],
    study: PsnrStudy,
    path: str | Path,
) -> None:
    """Original vs reconstructed example signal per noise level, plus the
    mean PSNR curve."""
    levels = study.noise_levels
    fig, axes = plt.subplots(1, len(levels) + 1, figsize=(4 * (len(levels) + 1), 3.2))
    for ax, variance, recon, mean_db in zip(axes, levels, reconstructions, study.psnr_db):
        ax.plot(signal, color="tab:blue", label="original")
        ax.plot(recon, color="tab:red", alpha=0.8, label="reconstructed")
        ax.set_title(f"variance {variance:g}\nmean PSNR {mean_db:.2f} dB", fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0].legend(fontsize=7)
    curve = axes[-1]
    curve.plot(levels, study.psnr_db, marker="o", color="tab:purple")
    curve.set_xlabel("noise variance")
    curve.set_ylabel("mean PSNR (dB)")
    curve.axhline(0.0, color="gray", linewidth=0.8)
    curve.set_title("PSNR ladder", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_ARGS)
    plt.close(fig)
