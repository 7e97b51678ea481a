"""Matplotlib figures written next to the CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scenario import RunReport  # noqa: E402


def new_figure(width: float = 8, height: float | None = None):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if not height:
        height = width * golden_ratio
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_queue(report: RunReport, path: Path) -> Path:
    fig, ax = new_figure()
    t = [row[0] for row in report.queue_series]
    rtt = report.rtt_in_cells
    ax.plot(t, [row[1] / rtt for row in report.queue_series], label="ABR queue")
    if any(row[2] != row[1] for row in report.queue_series):
        ax.plot(t, [row[2] / rtt for row in report.queue_series], label="total queue", alpha=0.7)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("queue (fraction of RTT in cells)")
    ax.set_title(f"{report.name}: max {report.max_abr_queue_cells} cells ({report.bounded_verdict.lower()})")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_trace(report: RunReport, name: str, column: int, ylabel: str, path: Path) -> Path:
    fig, ax = new_figure()
    series: dict[int, tuple[list, list]] = {}
    for row in report.traces[name]:
        xs, ys = series.setdefault(row[1], ([], []))
        xs.append(row[0])
        ys.append(row[column])
    for vc in sorted(series):
        ax.step(*series[vc], where="post", lw=0.8, label=f"vc {vc}")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel(ylabel)
    if len(series) <= 8:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_report(report: RunReport, out: Path) -> list[Path]:
    paths = [plot_queue(report, out / "queue.png")]
    if report.traces.get("acr"):
        paths.append(plot_trace(report, "acr", 2, "ACR (cells/s)", out / "acr.png"))
    if report.traces.get("cwnd"):
        paths.append(plot_trace(report, "cwnd", 2, "cwnd (bytes)", out / "cwnd.png"))
    return paths
