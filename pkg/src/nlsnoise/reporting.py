"""CSV/JSON report writers and run manifests.

Floats are written with 17 significant digits so that tables round-trip
exactly.  Data files carry no timestamps; wall-clock information lives in
the manifest only.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["SCHEMA_VERSION", "fmt", "write_csv", "write_json", "norms_csv", "Manifest", "default_out_dir"]

SCHEMA_VERSION = 1
OUT_ENV = "NLSNOISE_OUT"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "nlsnoise-out"))


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    tmp.replace(path)


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> Path:
    path = Path(path)
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([fmt(r.get(c, "")) for c in columns])
    _atomic_write(path, buf.getvalue())
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def write_json(path, obj) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def norms_csv(path, traj) -> Path:
    """Columns: ``t``, ``mass``, ``energy``, ``H^gamma`` per configured gamma, ``Linf``."""
    norms = traj.norms
    cols = ["t", "mass", "energy"] + [f"H^{g:g}" for g in traj.config.gammas] + ["Linf"]
    rows = []
    for i, t in enumerate(norms.times):
        row = {"t": t}
        row.update({k: v[i] for k, v in norms.records.items()})
        rows.append(row)
    return write_csv(path, rows, cols)


class Manifest:
    """Run manifest, written atomically as ``manifest.json``."""

    def __init__(self, command: str, config_hash: str = "", **params):
        self.data = {
            "tool": "nlsnoise",
            "tool_version": __version__,
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config_hash": config_hash,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "params": params,
            "outputs": {},
        }
        self._t0 = time.time()
        self.data["started"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    def add_output(self, name: str, path) -> None:
        self.data["outputs"][name] = str(path)

    def set(self, **kw) -> None:
        self.data.update(kw)

    def write(self, out_dir) -> Path:
        self.data["wall_clock_seconds"] = round(time.time() - self._t0, 3)
        return write_json(Path(out_dir) / "manifest.json", self.data)
