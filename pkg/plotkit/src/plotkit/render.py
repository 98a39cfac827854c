"""Render experiment CSVs into the three figure styles of the study:
reliability-vs-rate curves per lifetime, reward convergence traces, and
instantaneous-throughput boxplots.

Input CSVs follow the harness contracts (metrics/summary, training trace,
samples); this package never imports the simulator, only its file formats.
Rendering is deterministic: series and panels appear in sorted order, and the
input files are never modified.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("reliability_curves", "convergence", "throughput_boxplot")


class CsvShapeError(ValueError):
    """Input CSV does not match the expected harness schema."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list
    out: str | None = None
    labels: list = field(default_factory=list)   # one per input (convergence)
    lifetime: int | None = None                  # optional boxplot filters
    aggregate_rate: float | None = None
    smooth: int = 1                              # convergence rolling-mean window

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CsvShapeError(f"unknown figure kind {self.kind!r}; known: {', '.join(KINDS)}")
        if not self.inputs:
            raise CsvShapeError("at least one input CSV is required")


def read_csv(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvShapeError(f"{path}: file is empty (no header)") from None
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise CsvShapeError(f"{path}: no data rows under header {header}")
    return header, rows


def require_columns(path, header, needed):
    missing = [c for c in needed if c not in header]
    if missing:
        raise CsvShapeError(f"{path}: missing column(s) {', '.join(missing)}; "
                            f"header is {','.join(header)}")


def render(spec: PlotSpec):
    """Build the figure; save it when ``spec.out`` is set. Returns the Figure."""
    if spec.kind == "reliability_curves":
        fig = _reliability_curves(spec)
    elif spec.kind == "convergence":
        fig = _convergence(spec)
    else:
        fig = _throughput_boxplot(spec)
    if spec.out:
        fig.savefig(spec.out, dpi=150, bbox_inches="tight")
    return fig


def _mean(vals):
    return sum(vals) / len(vals)


def _reliability_curves(spec: PlotSpec):
    """One panel per lifetime, one reliability-vs-rate line per strategy."""
    path = spec.inputs[0]
    header, rows = read_csv(path)
    require_columns(path, header, ["strategy", "lifetime", "aggregate_rate"])
    if "reliability" in header:
        ycol = "reliability"          # metrics.csv: per-episode rows, averaged here
    elif "mean_episode_reliability" in header:
        ycol = "mean_episode_reliability"
    else:
        raise CsvShapeError(f"{path}: missing column(s) reliability or "
                            "mean_episode_reliability")

    lifetimes = sorted({int(r["lifetime"]) for r in rows})
    strategies = sorted({r["strategy"] for r in rows})
    fig, axes = plt.subplots(1, len(lifetimes), figsize=(4.2 * len(lifetimes), 3.4),
                             sharey=True, squeeze=False)
    for ax, life in zip(axes[0], lifetimes):
        for strategy in strategies:
            pts = {}
            for r in rows:
                if int(r["lifetime"]) == life and r["strategy"] == strategy:
                    pts.setdefault(float(r["aggregate_rate"]), []).append(float(r[ycol]))
            rates = sorted(pts)
            ax.plot(rates, [_mean(pts[x]) for x in rates], marker="o", label=strategy)
        ax.set_title(f"lifetime {life}")
        ax.set_xlabel("aggregate arrival rate")
        ax.grid(True, alpha=0.3)
    axes[0][0].set_ylabel("reliability")
    axes[0][-1].legend(loc="best", fontsize=8)
    fig.suptitle("Reliability vs arrival rate")
    return fig


def _smooth(vals, window):
    if window <= 1:
        return vals
    out = []
    acc = 0.0
    for i, v in enumerate(vals):
        acc += v
        if i >= window:
            acc -= vals[i - window]
        out.append(acc / min(i + 1, window))
    return out


def _convergence(spec: PlotSpec):
    """Reward per training episode, one line per input trace."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    labels = spec.labels or [Path(p).stem for p in spec.inputs]
    if len(labels) != len(spec.inputs):
        raise CsvShapeError("one label per input trace is required")
    for path, label in zip(spec.inputs, labels):
        header, rows = read_csv(path)
        require_columns(path, header, ["episode", "reward_sum"])
        episodes = [int(r["episode"]) for r in rows]
        rewards = _smooth([float(r["reward_sum"]) for r in rows], spec.smooth)
        ax.plot(episodes, rewards, label=label)
    ax.set_xlabel("episode")
    ax.set_ylabel("reward")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Reward convergence")
    return fig


def _throughput_boxplot(spec: PlotSpec):
    """Per-strategy boxplot of instantaneous (per-step) timely throughput."""
    path = spec.inputs[0]
    header, rows = read_csv(path)
    require_columns(path, header, ["strategy", "deliveries"])
    if spec.lifetime is not None:
        require_columns(path, header, ["lifetime"])
        rows = [r for r in rows if int(r["lifetime"]) == spec.lifetime]
    if spec.aggregate_rate is not None:
        require_columns(path, header, ["aggregate_rate"])
        rows = [r for r in rows if float(r["aggregate_rate"]) == spec.aggregate_rate]
    if not rows:
        raise CsvShapeError(f"{path}: no rows left after filtering")
    strategies = sorted({r["strategy"] for r in rows})
    data = [[float(r["deliveries"]) for r in rows if r["strategy"] == s]
            for s in strategies]
    fig, ax = plt.subplots(figsize=(1.4 * len(strategies) + 2.5, 3.6))
    ax.boxplot(data, tick_labels=strategies, showmeans=True,
               meanprops={"marker": "x", "markeredgecolor": "green"})
    ax.set_ylabel("instantaneous timely throughput")
    ax.grid(True, axis="y", alpha=0.3)
    title = "Instantaneous timely throughput"
    if spec.lifetime is not None or spec.aggregate_rate is not None:
        parts = []
        if spec.lifetime is not None:
            parts.append(f"lifetime {spec.lifetime}")
        if spec.aggregate_rate is not None:
            parts.append(f"aggregate rate {spec.aggregate_rate:g}")
        title += " (" + ", ".join(parts) + ")"
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right", fontsize=8)
    return fig
