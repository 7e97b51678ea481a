"""Report emission: key/value text, JSON, queue CSV, optional traces and figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

from .scenario import RunReport

QUEUE_COLUMNS = ("time_ms", "abr_queue_cells", "total_queue_cells")

TRACE_COLUMNS = {
    "acr": ("time_ms", "vc", "acr_cells_per_s"),
    "cwnd": ("time_ms", "vc", "cwnd_bytes", "snd_una", "snd_nxt"),
    "erica": ("interval_end_time_ms", "abr_capacity", "input_rate", "overload", "n_active", "fair_share"),
}


def _flat(prefix: str, value: Any, out: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for k in value:
            _flat(f"{prefix}.{k}" if prefix else k, value[k], out)
    elif isinstance(value, list):
        out.append((prefix, ",".join(str(v) for v in value)))
    else:
        out.append((prefix, str(value)))


def summary_text(report: RunReport) -> str:
    rows: list[tuple[str, str]] = []
    _flat("", report.summary(), rows)
    return "".join(f"{k}: {v}\n" for k, v in rows)


def write_csv(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_report(
    report: RunReport,
    out_dir: str | Path,
    traces: set[str] | frozenset[str] = frozenset(),
    figures: bool = False,
) -> list[Path]:
    """Write ``summary.txt``, ``summary.json`` and ``queue.csv`` (plus extras) to ``out_dir``.

    Raises ``OSError`` if the directory cannot be created or written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "summary.txt"
    path.write_text(summary_text(report))
    written.append(path)

    path = out / "summary.json"
    path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    written.append(path)

    path = out / "queue.csv"
    write_csv(path, QUEUE_COLUMNS, [(f"{t:.3f}", a, n) for t, a, n in report.queue_series])
    written.append(path)

    for name in sorted(traces):
        if name == "queue" or name not in report.traces:
            continue
        path = out / f"{name}.csv"
        write_csv(path, TRACE_COLUMNS[name], report.traces[name])
        written.append(path)

    if figures:
        from .plotting import plot_report

        written.extend(plot_report(report, out))
    return written
