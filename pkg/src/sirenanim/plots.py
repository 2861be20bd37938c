"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_loss_figure", "save_psnr_figure", "save_bench_figure"]


def save_loss_figure(history, path, title="Distillation loss"):
    """Loss curves (log scale) over examples seen, one line per column."""
    fig, ax = plt.subplots(figsize=(7, 4))
    examples = history.column("examples")
    skip = {"step", "examples", "lr", "lam_flow", "lam_warped", "lam_direct", "lam_final"}
    for name in history.columns:
        if name in skip:
            continue
        ax.plot(examples, history.column(name), label=name, linewidth=1.2)
    ax.set_xlabel("training examples")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_psnr_figure(values, path, title="Held-out PSNR"):
    """Histogram of per-pose PSNR values; infinities are dropped."""
    finite = [v for v in values if np.isfinite(v)]
    fig, ax = plt.subplots(figsize=(6, 4))
    if finite:
        ax.hist(finite, bins=min(30, max(5, len(finite) // 4)), color="#4878cf",
                edgecolor="black", linewidth=0.4)
        ax.axvline(np.mean(finite), color="crimson", linestyle="--",
                   label=f"mean {np.mean(finite):.2f} dB")
        ax.legend(fontsize=8)
    else:
        ax.text(0.5, 0.5, "all poses identical (PSNR = inf)",
                ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("PSNR (dB)")
    ax.set_ylabel("poses")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_figure(samples_ms, path, title="Frame time"):
    """Per-iteration frame times plus their distribution."""
    samples_ms = np.asarray(samples_ms)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(samples_ms, linewidth=0.6)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("ms")
    ax1.set_title("per-frame wall time")
    ax1.grid(True, alpha=0.3)
    ax2.hist(samples_ms, bins=40, color="#60a860", edgecolor="black", linewidth=0.3)
    ax2.axvline(samples_ms.mean(), color="crimson", linestyle="--",
                label=f"mean {samples_ms.mean():.2f} ms")
    ax2.set_xlabel("ms")
    ax2.set_ylabel("frames")
    ax2.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
