"""Throughput and backlog figures overlaying several runs."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .outputs import SUMMARY_FILE, WINDOWS_FILE, read_windows_csv  # noqa: E402


def find_runs(in_dir) -> list:
    """Run directories (those holding a windows CSV) at or below ``in_dir``."""
    root = Path(in_dir)
    return sorted(p.parent for p in root.rglob(WINDOWS_FILE))


def _label(run_dir: Path) -> str:
    summary = run_dir / SUMMARY_FILE
    if summary.exists():
        data = json.loads(summary.read_text())
        if data.get("policy") == "mjssa":
            return "M-JSSA"
        return f"{data.get('policy', '?').upper()} V={data.get('v', float('nan')):g}"
    return run_dir.name


def emit_plots(run_dirs, out_dir) -> list:
    """Write ``throughput.png`` and ``queue.png`` overlaying every run; returns the paths."""
    run_dirs = [Path(p) for p in run_dirs]
    if not run_dirs:
        raise ValueError("no runs to plot: pass directories containing windows.csv")
    series = [(_label(d), read_windows_csv(d / WINDOWS_FILE)) for d in run_dirs]
    lengths = {len(s["window_end_s"]) for _, s in series}
    if len(lengths) != 1:
        detail = ", ".join(f"{lab}: {len(s['window_end_s'])}" for lab, s in series)
        raise ValueError(f"window series lengths differ ({detail})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for column, ylabel, scale, name in (
        ("throughput_bps", "time avg. total throughput [Mbit/s]", 1e-6, "throughput.png"),
        ("total_queue_bits", "total queue size [Mbit]", 1e-6, "queue.png"),
    ):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, s in series:
            ax.plot(s["window_end_s"], s[column] * scale, label=label, linewidth=1.0)
        ax.set_xlabel("time [s]")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
