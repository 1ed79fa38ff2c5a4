"""CSV profiles and their JSON sidecars.

Numbers are written with nine significant digits through Python's own
formatting, which ignores the process locale; lines end in ``\\n``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__

COLUMNS = ("position", "clicks", "received", "oracle_value")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.9g}"


def screen_units(angular: bool, positions) -> np.ndarray:
    """Radians to degrees for angular screens, meters to millimeters otherwise."""
    p = np.asarray(positions, dtype=np.float64)
    return np.degrees(p) if angular else p * 1e3


def write_profile(path, positions, clicks=None, received=None, oracle=None) -> Path:
    """Write columns present among ``clicks``, ``received`` and ``oracle``.

    ``positions`` must already be in output units (see :func:`screen_units`).
    """
    positions = np.asarray(positions)
    if positions.size == 0:
        raise ValueError("refusing to write an empty profile")
    cols = {"position": positions, "clicks": clicks, "received": received, "oracle_value": oracle}
    names = [c for c in COLUMNS if cols[c] is not None]
    data = [np.asarray(cols[c]) for c in names]
    for name, col in zip(names, data):
        if len(col) != len(positions):
            raise ValueError(f"column {name} has {len(col)} rows, expected {len(positions)}")
    lines = [",".join(names)]
    for i in range(len(positions)):
        lines.append(",".join(_fmt(col[i]) for col in data))
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_profile(path) -> dict[str, np.ndarray]:
    with open(path, encoding="ascii", newline="") as fh:
        header, *rows = fh.read().split("\n")
    names = header.split(",")
    unknown = set(names) - set(COLUMNS)
    if unknown or names[0] != "position":
        raise ValueError(f"{path}: unexpected header {header!r}")
    rows = [r for r in rows if r]
    table = [r.split(",") for r in rows]
    out = {}
    for j, name in enumerate(names):
        col = [t[j] for t in table]
        if name in ("clicks", "received"):
            out[name] = np.array([int(v) for v in col], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in col], dtype=np.float64)
    return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def write_sidecar(csv_path, config: dict, seed: int, extra: dict | None = None) -> Path:
    """``<csv>.json`` holding the resolved config, seed and package version."""
    doc = {"config": _plain(config), "seed": int(seed), "version": __version__}
    if extra:
        doc["summary"] = _plain(extra)
    path = Path(str(csv_path) + ".json") if not str(csv_path).endswith(".csv") else Path(csv_path).with_suffix(".json")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
