"""
Report figures written next to the CSV outputs.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no
interactive backend or pyplot state is involved.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure

from .lens_optics import ZoneLayout, render_layout

DPI = 120
POLARITY_COLORS = {1: "tab:red", -1: "tab:blue", 0: "0.85"}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    return path


def plot_layout(layout: ZoneLayout, path, range_m: float = 4.0, n_points: int = 4000,
                seed: int = 0) -> Path:
    """Scatter of the sensing wedge coloured by zone polarity."""
    x, y, sign = render_layout(layout, range_m, n_points, seed)
    fig = Figure(figsize=(5.5, 4.5))
    ax = fig.add_subplot()
    for s, label in ((1, "positive"), (-1, "negative"), (0, "gap")):
        m = sign == s
        ax.scatter(x[m], y[m], s=2, c=POLARITY_COLORS[s], label=label, linewidths=0)
    for angle, _ in layout.axes:
        ax.plot([0, range_m * math.cos(angle)], [0, range_m * math.sin(angle)],
                lw=0.4, c="k", alpha=0.4)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(f"{len(layout.zones)} zones, theta_c = {math.degrees(layout.theta_c):.3f} deg")
    ax.legend(loc="upper left", markerscale=4, fontsize="small")
    return _save(fig, path)


def plot_traces(traces: Mapping[str, object], path, title: str = "") -> Path:
    """Stacked time series; ``traces`` maps a label to a SignalTrace."""
    fig = Figure(figsize=(7, 1.8 * max(1, len(traces)) + 0.6))
    axes = fig.subplots(max(1, len(traces)), 1, sharex=True, squeeze=False)[:, 0]
    for ax, (label, tr) in zip(axes, traces.items()):
        ax.plot(tr.times, tr.samples, lw=0.7)
        ax.set_ylabel(label)
    axes[-1].set_xlabel("t (s)")
    if title:
        axes[0].set_title(title)
    return _save(fig, path)


def plot_azimuth(observations: Sequence, path, truth: Mapping[str, Sequence] | None = None) -> Path:
    """Per-window azimuth change; ``truth`` maps sensor id to true values in radians."""
    by_sensor: dict = {}
    for o in observations:
        by_sensor.setdefault(o.sensor_id, []).append(o)
    fig = Figure(figsize=(7, 3.5))
    ax = fig.add_subplot()
    for sid, obs in by_sensor.items():
        t = [o.window_end for o in obs]
        line, = ax.step(t, np.degrees([o.theta for o in obs]), where="post", lw=0.8, label=sid)
        if truth and sid in truth:
            ax.plot(t, np.degrees(truth[sid]), ls=":", c=line.get_color())
    ax.set_xlabel("window end (s)")
    ax.set_ylabel("azimuth change (deg)")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_trajectory(truth, estimates, poses: Sequence = (), path=None,
                    area: Sequence[float] = (0.0, 7.0, 0.0, 7.0)) -> Path:
    """Ground truth against filter estimates in the room plane."""
    est = np.array([[s.x, s.y] for _, s in estimates]).reshape(-1, 2)
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    ax.plot(truth.x, truth.y, c="k", lw=1.0, label="truth")
    ax.plot(est[:, 0], est[:, 1], ".-", c="tab:orange", lw=0.5, ms=3, label="estimate")
    for p in poses:
        ax.plot(p.a, p.b, "s", c="tab:green", ms=6)
        ax.annotate(p.sensor_id, (p.a, p.b), textcoords="offset points", xytext=(4, 4))
    x0, x1, y0, y1 = area
    ax.set_xlim(x0 - 0.3, x1 + 0.3)
    ax.set_ylim(y0 - 0.3, y1 + 0.3)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_cdf(reports: Mapping[str, object], path) -> Path:
    """Empirical error CDFs, one curve per labelled EvalReport."""
    fig = Figure(figsize=(5.5, 4))
    ax = fig.add_subplot()
    for label, rep in reports.items():
        r, p = zip(*rep.cdf)
        ax.step(r, p, where="post", label=f"{label} ({rep.mean_error:.2f} m)")
    ax.axvline(1.0, c="0.6", lw=0.6, ls="--")
    ax.set_xlabel("error (m)")
    ax.set_ylabel("P(error <= r)")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_sweep(parameter: str, results: Sequence, path) -> Path:
    """Mean error with one-std bars against the swept value."""
    v = np.array([float(x) for x, _ in results])
    m = np.array([r.mean_error for _, r in results])
    s = np.array([r.std_error for _, r in results])
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    ax.errorbar(v, m, yerr=s, marker="o", capsize=3)
    if parameter == "period" and v.min() > 0 and v.max() / v.min() > 5:
        ax.set_xscale("log")
    ax.set_xlabel({"period": "estimation period (s)", "n_sensors": "sensors"}.get(parameter, parameter))
    ax.set_ylabel("mean error (m)")
    return _save(fig, path)
