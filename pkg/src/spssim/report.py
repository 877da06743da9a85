"""Matplotlib rendering of run outputs: PER-distance curves, gap histograms
and sweep comparisons, written next to the delimited outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from spssim.engine import RunResult
from spssim.metrics import PerBin


def _style(ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)


def per_curve_figure(curves: dict[str, list[PerBin]], path: str) -> None:
    """One PER-vs-distance line per labeled run; empty bins break the line."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, bins in curves.items():
        xs = [(b.low_m + b.high_m) / 2 for b in bins]
        ys = [b.per if b.per is not None else math.nan for b in bins]
        ax.plot(xs, ys, marker=".", label=label)
    _style(ax, "transmitter-receiver distance (m)", "packet error rate",
           "PER by distance")
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def ipg_hist_figure(result: RunResult, path: str) -> None:
    """Normalized gap histogram; overflow beyond the cap is annotated."""
    hist = result.ipg
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [low for low, _, _, _ in hist.bins]
    ys = [freq for _, _, freq, _ in hist.bins]
    width = hist.bins[0][1] - hist.bins[0][0] if hist.bins else 100
    ax.bar(xs, ys, width=width * 0.9, align="edge")
    _style(ax, "inter-packet gap (ms)", "normalized frequency",
           "Inter-packet gap distribution")
    ax.annotate(f">= {hist.cap_ms} ms: n={hist.overflow_count} "
                f"(f={hist.overflow_freq:.4f})",
                xy=(0.98, 0.95), xycoords="axes fraction", ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sweep_figure(rows: list[dict], axis: str, path: str) -> None:
    """Seed-mean PER and gap statistics against the swept parameter."""
    values = sorted({str(r["value"]) for r in rows})

    def seed_mean(v, key):
        xs = [r[key] for r in rows if str(r["value"]) == v and not math.isnan(r[key])]
        return sum(xs) / len(xs) if xs else math.nan

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    idx = range(len(values))
    ax1.bar(idx, [seed_mean(v, "per_total") for v in values])
    ax1.set_xticks(list(idx), values)
    _style(ax1, axis, "total PER", "PER")
    ax2.bar(idx, [seed_mean(v, "ipg_mean_ms") for v in values],
            label="mean", alpha=0.8)
    ax2.plot(idx, [seed_mean(v, "ipg_p95_ms") for v in values],
             "k^--", label="p95")
    ax2.set_xticks(list(idx), values)
    _style(ax2, axis, "inter-packet gap (ms)", "IPG")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
