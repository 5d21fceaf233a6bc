"""Figure builders for simulation traces: layer snapshots, detection
probability curves, and sweep comparisons."""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import load_layer_outlines, load_summary, load_sweep, load_trace

ROLE_COLORS = {
    ("free",): "#e6a23c",
    ("working", "open"): "#2e9d4e",
    ("working", "saturated"): "#cf3b30",
}


def _snap_time(available: np.ndarray, wanted: float) -> float:
    j = int(np.argmin(np.abs(available - wanted)))
    got = float(available[j])
    spacing = float(np.min(np.diff(available))) if len(available) > 1 else 0.0
    if abs(got - wanted) > max(spacing, 1e-9):
        warnings.warn(f"requested time {wanted:g} not in trace; snapped to {got:g}",
                      stacklevel=3)
    return got


def plot_snapshots(trace_path, times, out_dir, config_path=None, prefix="snapshot"):
    """One scatter image per requested time: layer outlines (when the config
    echo is available), agents colored by role/detect state, and division
    point markers. Returns the written paths."""
    trace = load_trace(trace_path)
    available = trace.times
    outlines = load_layer_outlines(config_path) if config_path else []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for wanted in times:
        t = _snap_time(available, float(wanted))
        rows = trace.at_time(t)
        fig, ax = plt.subplots(figsize=(7, 7))
        for theta, radius in outlines:
            ax.plot(radius * np.cos(theta), radius * np.sin(theta),
                    color="0.75", lw=1.0, zorder=1)
        roles = rows["role"].astype(int)
        sat = rows["c"].astype(int)
        free = roles == 0
        open_w = (roles == 1) & (sat == 0)
        sat_w = (roles == 1) & (sat == 1)
        ax.scatter(rows["x"][free], rows["y"][free], s=42, zorder=3,
                   color=ROLE_COLORS[("free",)], label="free")
        ax.scatter(rows["x"][open_w], rows["y"][open_w], s=42, zorder=3,
                   color=ROLE_COLORS[("working", "open")], label="working (open)")
        ax.scatter(rows["x"][sat_w], rows["y"][sat_w], s=42, zorder=3,
                   color=ROLE_COLORS[("working", "saturated")],
                   label="working (saturated)")
        # division points sit on their owner's layer
        for j in np.nonzero(roles == 1)[0]:
            s = rows["s"][j]
            if not np.isfinite(s):
                continue
            k = int(rows["k"][j])
            if outlines and 1 <= k <= len(outlines):
                theta, radius = outlines[k - 1]
                r_s = float(np.interp(s % (2 * math.pi), theta, radius))
            else:
                r_s = rows["r"][j]
            ax.plot(r_s * math.cos(s), r_s * math.sin(s), marker="*",
                    color="black", ms=8, ls="none", zorder=4)
        ax.plot([], [], marker="*", color="black", ls="none", label="division point")
        ax.set_aspect("equal")
        ax.set_title(f"t = {t:g} s")
        ax.legend(loc="upper right", fontsize=8)
        path = out_dir / f"{prefix}_t{t:g}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written


def plot_probability(summary_paths, out_path, labels=None):
    """Per-layer and total detection probability against time.

    With two summaries the totals are overlaid for comparison.
    """
    if isinstance(summary_paths, (str, Path)):
        summary_paths = [summary_paths]
    summaries = [load_summary(p) for p in summary_paths]
    labels = labels or [Path(p).stem for p in summary_paths]
    fig, ax = plt.subplots(figsize=(8, 5))
    if len(summaries) == 1:
        s = summaries[0]
        for m, name in enumerate(s.layer_names):
            ax.plot(s.t, s.layer_p[:, m], lw=1.2, label=name.replace("_", " "))
        ax.plot(s.t, s.total_p, lw=2.0, color="black", label="P (system)")
    else:
        for s, lab in zip(summaries, labels):
            ax.plot(s.t, s.total_p, lw=1.8, label=lab)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_sweep(sweep_path, out_path):
    """Final detection probability against the swept parameter, one series
    per mode present in the table."""
    table = load_sweep(sweep_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    order = np.argsort(table.param)
    for name, values in table.series.items():
        mask = np.isfinite(values[order])
        ax.plot(table.param[order][mask], values[order][mask], marker="o",
                label=name.replace("_", " "))
    ax.set_xlabel("parameter value")
    ax.set_ylabel("final detection probability")
    ax.grid(alpha=0.3)
    ax.legend()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
