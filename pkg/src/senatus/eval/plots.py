"""Matplotlib figures written straight to files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from senatus.eval.bench import BRUTE_FORCE, LSH, BenchRow  # noqa: E402
from senatus.eval.powerlaw import LengthDistribution  # noqa: E402


def plot_length_distribution(dist: LengthDistribution, path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(dist.lengths, dist.counts, ".", ms=3, alpha=0.6, label="snippets")
    if dist.is_power_law:
        x = np.array([dist.fit_low, dist.fit_high])
        ax.loglog(x, np.exp(dist.intercept) * x ** dist.slope, "r-",
                  label=f"slope {dist.slope:.2f}, $R^2$ {dist.r2:.2f}")
    ax.set_xlabel("feature length")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_scalability(rows: Sequence[BenchRow], path: str | Path) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    for method, style in ((LSH, "o-"), (BRUTE_FORCE, "s--")):
        pts = sorted((r.corpus_size, r.mean_comparisons, r.mean_time_s)
                     for r in rows if r.method == method and r.quartile == 0)
        if not pts:
            continue
        n, c, t = zip(*pts)
        a1.loglog(n, c, style, label=method)
        a2.loglog(n, t, style, label=method)
    a1.set_xlabel("corpus size")
    a1.set_ylabel("comparisons per query")
    a2.set_xlabel("corpus size")
    a2.set_ylabel("seconds per query")
    a1.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_length_ratios(ratios: Sequence[float], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(ratios, bins=40)
    ax.set_xlabel("candidate length / query length")
    ax.set_ylabel("results")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
