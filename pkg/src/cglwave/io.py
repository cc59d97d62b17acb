"""Persistence: snapshot files, CSV tables, JSON summaries and run manifests.

Snapshot format: ``<stem>.bin`` holds the flattened samples as little-endian
float64 (complex fields interleave real and imaginary parts); ``<stem>.json``
holds the header (dim, n, L, eps, kappa, s, time, variable, complex, shape).
"""
from dataclasses import dataclass
import csv
import hashlib
import json
import os
from pathlib import Path
import platform
import sys

import numpy as np

from . import __version__, kernels

OUTPUT_ROOT_ENV = "CGLWAVE_OUTPUT_ROOT"
FLOAT_FMT = "{:.17g}"


@dataclass
class SnapshotHeader:
    dim: int
    n: int
    L: float
    eps: float
    kappa: float
    s: int
    time: float
    variable: str
    complex: bool
    shape: tuple

    def to_dict(self):
        d = dict(self.__dict__)
        d["shape"] = list(self.shape)
        d["dtype"] = "<f8"
        d["layout"] = "C-order, interleaved re/im" if self.complex else "C-order"
        return d


def run_stem(eps, kappa, n, seed, prefix=""):
    """File-name stem embedding the run parameters."""
    head = f"{prefix}_" if prefix else ""
    return f"{head}eps{eps:.6g}_kappa{kappa:.6g}_n{n}_seed{seed}"


def output_root(explicit=None):
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def write_snapshot(path_stem, values, header):
    """Write ``values`` (real or complex array) and its JSON sidecar; returns the two paths."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(values)
    if np.iscomplexobj(arr):
        flat = arr.astype("<c16").view("<f8").ravel()
    else:
        flat = arr.astype("<f8").ravel()
    bin_path = stem.with_suffix(".bin")
    json_path = stem.with_suffix(".json")
    flat.tofile(bin_path)
    meta = header.to_dict()
    meta["n_values"] = int(flat.size)
    meta["sha256"] = hashlib.sha256(flat.tobytes()).hexdigest()
    write_json(json_path, meta)
    return bin_path, json_path


def read_snapshot(path_stem):
    """Inverse of ``write_snapshot``: (values, header dict)."""
    stem = Path(path_stem)
    with open(stem.with_suffix(".json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    flat = np.fromfile(stem.with_suffix(".bin"), dtype="<f8")
    if flat.size != meta["n_values"]:
        raise ValueError(f"snapshot {stem} has {flat.size} values, header says {meta['n_values']}")
    shape = tuple(meta["shape"])
    if meta["complex"]:
        values = flat.view("<c16").reshape(shape)
    else:
        values = flat.reshape(shape)
    return values, meta


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT.format(float(value))
    return str(value)


def write_csv(path, columns, rows):
    """CSV with fixed column order and 17-significant-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_plot_data(path, x, y, x_name="x", y_name="y"):
    """Two-column whitespace-separated file with a commented header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {x_name} {y_name}\n")
        for a, b in zip(x, y):
            fh.write(f"{FLOAT_FMT.format(float(a))} {FLOAT_FMT.format(float(b))}\n")
    return path


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(config_text, seed, wall_time, artifacts, command, status, extra=None):
    """Reproducibility record: config echo, code version, seed, timing and artifact digests."""
    return {
        "command": command,
        "status": status,
        "config": config_text,
        "seed": seed,
        "wall_time_s": float(wall_time),
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "kernel_backend": kernels.BACKEND,
        "artifacts": {Path(a).name: file_digest(a) for a in artifacts if Path(a).exists()},
        **(extra or {}),
    }
