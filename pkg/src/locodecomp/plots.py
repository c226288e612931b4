"""Figure rendering for analysis outputs.

Every function writes one PNG next to the delimited outputs and returns the
path. The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def save_global_scores(decompositions, shapley, feature_names, path):
    """Grouped bars of unique / redundant / synergy per feature, plus Shapley marks."""
    p = len(feature_names)
    idx = np.arange(p)
    unique = [d.unique for d in decompositions]
    redundant = [d.redundant for d in decompositions]
    synergy = [d.synergy for d in decompositions]
    values = [s.value for s in shapley]

    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * p), 4.5))
    width = 0.27
    ax.bar(idx - width, unique, width, label="unique", color="#1f77b4")
    ax.bar(idx, redundant, width, label="redundant", color="#2ca02c")
    ax.bar(idx + width, synergy, width, label="synergy", color="#d62728")
    ax.plot(idx, values, "k_", markersize=14, label="shapley")
    ax.set_xticks(idx)
    ax.set_xticklabels(feature_names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("score (share of target variance)")
    ax.legend(fontsize=8)
    ax.axhline(0.0, color="0.6", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_path_matrix(matrix, feature_names, path, title):
    """Heatmap of per-step LOCO changes: rows are drivers, columns partners."""
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    vmax = float(np.max(np.abs(matrix))) or 1.0
    image = ax.imshow(matrix, cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
    ax.set_xticks(range(len(feature_names)))
    ax.set_xticklabels(feature_names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(feature_names)))
    ax.set_yticklabels(feature_names, fontsize=8)
    ax.set_xlabel("context feature")
    ax.set_ylabel("driver")
    ax.set_title(title, fontsize=10)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_local_panels(panels, path):
    """Per-pattern score maps side by side.

    panels: list of (title, N x p matrix, column names) with columns already
    ordered by their global score.
    """
    count = len(panels)
    fig, axes = plt.subplots(1, count, figsize=(3.2 * count, 5.5), squeeze=False)
    for ax, (title, matrix, names) in zip(axes[0], panels):
        vmax = float(np.percentile(np.abs(matrix), 98)) or 1.0
        image = ax.imshow(matrix, cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90, fontsize=6)
        ax.set_title(title, fontsize=9)
        ax.set_ylabel("pattern")
        fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_threshold_sweep(analysis, feature_name, path):
    """Retention sweep: correlation curve plus class histograms before and after."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))

    discards = [pt.discard_percent for pt in analysis.points]
    corrs = [pt.pearson_r for pt in analysis.points]
    axes[0].plot(discards, corrs, "o-", color="#1f77b4")
    axes[0].set_xlabel("patterns discarded (%)")
    axes[0].set_ylabel(f"corr({feature_name}, target)")
    axes[0].set_title("correlation on retained patterns", fontsize=10)
    axes[0].grid(alpha=0.3)

    centers = 0.5 * (analysis.bin_edges[:-1] + analysis.bin_edges[1:])
    first, last = analysis.points[0], analysis.points[-1]
    colors = plt.cm.viridis(np.linspace(0.1, 0.9, len(analysis.class_names)))
    for name, color in zip(analysis.class_names, colors):
        axes[1].plot(centers, first.class_counts[name], ":", color=color, alpha=0.7)
        axes[1].plot(centers, last.class_counts[name], "-", color=color, label=name)
    axes[1].set_xlabel(feature_name)
    axes[1].set_ylabel("count")
    axes[1].set_title(
        f"class histograms: all patterns (dotted) vs"
        f" {last.discard_percent:g}% discarded (solid)",
        fontsize=10,
    )
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
