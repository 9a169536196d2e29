"""CSV schemas and the binary trajectory cache.

Trajectory cache layout (all little-endian)::

    magic     16 bytes  b"TORINFDYN\\0" padded with zero bytes
    version   u16       currently 1
    flags     u16       bit 0: positions present
    M         u32       particles
    T         u32       stored states
    L, rho, s, eta, r_int   5 x f64
    seed      u64
    headings  T*M f64, row-major by state
    positions T*M*2 f64 (only if flag bit 0)
"""

from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..vicsek import Trajectory, VicsekConfig

SCHEMAS = {
    "accuracy": ("distribution", "params", "metric", "backend", "k", "N", "reps",
                 "mean", "se_e4", "exact", "bias"),
    "perf": ("backend", "metric", "N_I", "build_s", "query_s", "total_s",
             "peak_mem_bytes", "value"),
    "stability": ("eta", "metric", "variant", "value", "se_e4"),
    "periodicity": ("mu", "wrapped", "mean", "se_e4", "exact"),
    "complexity": ("D", "N", "k", "eps", "alpha", "beta", "measured_alpha",
                   "measured_beta", "clouds", "predicted_cost"),
}

OUTPUT_DIR_ENV = "TORINFO_OUTPUT_DIR"


def resolve_output(path: str) -> Path:
    """Relative outputs land in ``$TORINFO_OUTPUT_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


def write_csv(path, kind: str, rows: Iterable[Mapping]) -> Path:
    columns = SCHEMAS[kind]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_meta(path, meta: dict) -> Path:
    """Sidecar JSON with everything needed to rerun an experiment."""
    path = Path(str(path) + ".meta.json")
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n",
                    encoding="utf-8")
    return path


def write_records_csv(path, data: np.ndarray, columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows((repr(float(v)) for v in row) for row in data)
    return path


MAGIC = b"TORINFDYN\0".ljust(16, b"\0")
VERSION = 1
_HEADER = struct.Struct("<16sHHII5dQ")


def save_trajectory(path, traj: Trajectory) -> Path:
    cfg = traj.config
    T, M = traj.headings.shape
    flags = 1 if traj.positions is not None else 0
    header = _HEADER.pack(MAGIC, VERSION, flags, M, T, cfg.L, cfg.rho, cfg.s,
                          cfg.eta, cfg.r_int, cfg.seed)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(traj.headings, dtype="<f8").tobytes())
        if flags & 1:
            fh.write(np.ascontiguousarray(traj.positions, dtype="<f8").tobytes())
    return path


def load_trajectory(path) -> Trajectory:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a trajectory header")
    magic, version, flags, M, T, L, rho, s, eta, r_int, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a trajectory cache (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported trajectory cache version {version}")
    off = _HEADER.size
    n_head = T * M * 8
    n_pos = T * M * 16 if flags & 1 else 0
    if len(raw) != off + n_head + n_pos:
        raise ValueError("trajectory cache payload has the wrong length")
    headings = np.frombuffer(raw, dtype="<f8", count=T * M, offset=off).reshape(T, M)
    positions = None
    if flags & 1:
        positions = np.frombuffer(raw, dtype="<f8", count=T * M * 2,
                                  offset=off + n_head).reshape(T, M, 2)
    cfg = VicsekConfig(M=M, rho=rho, s=s, eta=eta, tau=max(T - 1, 1),
                       r_int=r_int, seed=seed)
    return Trajectory(cfg, None if positions is None else positions.copy(),
                      headings.copy())
