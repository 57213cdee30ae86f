"""Files written for each finished run."""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_dict, format_config
from .engine import WINDOW_COLUMNS, SimResult

FRAME_COLUMNS = ("frame", "start_slot", "reconfigured", "k_star", "scheduled", "w1", "w2",
                 "cost_charged", "lyapunov_before", "lyapunov_after", "drift", "penalty",
                 "lhs", "rhs", "satisfied")

SUMMARY_FILE = "summary.json"
WINDOWS_FILE = "windows.csv"
FRAMES_FILE = "frames.csv"
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.cfg"


@dataclass
class RunManifest:
    config: dict
    code_version: str
    rng_seed: int
    outputs: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    created: str = ""
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__


def fmt(value) -> str:
    """CSV cell text; integral values print as integers, other floats round-trip exactly."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isfinite(value) and value.is_integer() and abs(value) < 2 ** 53:
        return str(int(value))
    return repr(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_windows_csv(result: SimResult, path) -> None:
    win = result.metrics.windows
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(WINDOW_COLUMNS)
        for i in range(len(win.get("window_end_s", ()))):
            writer.writerow([fmt(win[col][i]) for col in WINDOW_COLUMNS])


def write_frames_csv(result: SimResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FRAME_COLUMNS)
        for fr in result.frames:
            writer.writerow([
                fmt(fr.frame), fmt(fr.start_slot), fmt(fr.reconfigured), fmt(fr.k_star),
                " ".join(str(n) for n in fr.scheduled), fmt(fr.w1), fmt(fr.w2),
                fmt(fr.cost_charged), fmt(fr.lyapunov_before), fmt(fr.lyapunov_after),
                fmt(fr.drift), fmt(fr.penalty), fmt(fr.lhs), fmt(fr.rhs), fmt(fr.satisfied),
            ])


def write_outputs(result: SimResult, out_dir, wall_clock_s: float = 0.0) -> dict:
    """Write one run's files into ``out_dir`` and return ``{kind: path}``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {
        "summary": out / SUMMARY_FILE,
        "windows": out / WINDOWS_FILE,
        "frames": out / FRAMES_FILE,
        "config": out / CONFIG_FILE,
        "manifest": out / MANIFEST_FILE,
    }
    try:
        with open(paths["summary"], "w", encoding="utf-8") as fh:
            json.dump(_jsonable(result.metrics.summary()), fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_windows_csv(result, paths["windows"])
        write_frames_csv(result, paths["frames"])
        with open(paths["config"], "w", encoding="utf-8") as fh:
            fh.write(format_config(result.config))
        manifest = RunManifest(
            config=config_dict(result.config),
            code_version=__version__,
            rng_seed=result.config.rng_seed,
            outputs={k: os.fspath(p.name) for k, p in paths.items()},
            wall_clock_s=wall_clock_s,
            created=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        )
        with open(paths["manifest"], "w", encoding="utf-8") as fh:
            json.dump(_jsonable(asdict(manifest)), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out}: {exc}") from exc
    return paths


def read_windows_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = {}
    for col in WINDOW_COLUMNS:
        cols[col] = np.array([float(r[col]) for r in rows]) if rows else np.zeros(0)
    return cols


def read_frames_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
