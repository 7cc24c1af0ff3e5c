"""Artifact writers: CSV and JSON with 17 significant digits, field dumps, manifests."""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

FIELD_MAGIC = b"MBWF"
FIELD_VERSION = 1
# magic, version, time levels, space nodes, t0, t1
_FIELD_HEADER = struct.Struct("<4sIQQdd")
MANIFEST_KEYS = ("subcommand", "config_sha256", "seed", "grid", "wall_ms", "pass")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    header = header.split(",") if isinstance(header, str) else list(header)
    lines = [",".join(header)]
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"row has {len(r)} fields, header has {len(header)}")
        lines.append(",".join(fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def _json_text(obj, indent=0) -> str:
    pad, pad1 = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad1}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_text(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad1 + _json_text(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(_json_text(obj) + "\n")
    return path


def write_field_csv(path: str | Path, fld) -> Path:
    rows = []
    for n in range(fld.grid.nt + 1):
        tn = float(fld.grid.t[n])
        for x, w in zip(fld.x_nodes(n), fld.values[n]):
            rows.append((tn, float(x), float(w)))
    return write_csv(path, "t,x,value", rows)


def write_field_binary(path: str | Path, values: np.ndarray, t0: float, t1: float) -> Path:
    """Header (magic, version, dims, steps, window) then row-major little-endian float64."""
    v = np.ascontiguousarray(values, dtype="<f8")
    if v.ndim != 2:
        raise ValueError("field dump expects a (time levels, nodes) array")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_FIELD_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, v.shape[0], v.shape[1],
                                    float(t0), float(t1)))
        fh.write(v.tobytes(order="C"))
    return path


def read_field_binary(path: str | Path):
    data = Path(path).read_bytes()
    magic, ver, nlev, nnode, t0, t1 = _FIELD_HEADER.unpack_from(data)
    if magic != FIELD_MAGIC or ver != FIELD_VERSION:
        raise ValueError("not a field dump")
    vals = np.frombuffer(data, dtype="<f8", offset=_FIELD_HEADER.size).reshape(nlev, nnode)
    return vals, (t0, t1)


def write_manifest(out: str | Path, subcommand: str, config_sha256: str, seed: int, grid,
                   wall_ms: float, passed: bool, versions: dict | None = None) -> Path:
    man = {"subcommand": subcommand, "config_sha256": config_sha256, "seed": int(seed),
           "grid": grid, "wall_ms": round(float(wall_ms), 3), "pass": bool(passed)}
    if versions:
        man["versions"] = versions
    return write_json(Path(out) / "manifest.json", man)
