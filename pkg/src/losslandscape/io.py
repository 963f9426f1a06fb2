"""On-disk formats: binary checkpoint container, grid CSV, projection CSV, sidecars.

Checkpoint container (all integers little-endian)::

    offset  size  field
    0       8     magic  b"LLSCKPT\\x00"
    8       4     uint32 format version (1)
    12      32    model spec hash, raw sha256 bytes (zeros if unknown)
    44      8     int64 epoch index (-1 for directions)
    52      4     uint32 metadata length L
    56      L     metadata, UTF-8 JSON (layout table, spec text, free fields)
    56+L    8     uint64 element count N
    64+L    8N    float64 little-endian parameter array

Grid CSV: ``# key = value`` header lines, then a column header line and one
row per cell with every float written as ``%.17g`` (round-trips exactly).
"""
import json
import struct

import numpy as np

from .curvature import EigRatioMap
from .directions import Direction
from .models import Layout, ModelSpec, ParamVector
from .surface import LOSS_COLUMNS, AxisSpec, LossGrid

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CheckpointFormatError",
    "save_params",
    "load_params",
    "save_direction",
    "load_direction",
    "read_container",
    "write_grid_csv",
    "read_grid_csv",
    "write_ratio_csv",
    "read_ratio_csv",
    "write_projection_csv",
    "read_projection_csv",
    "write_sidecar",
    "read_sidecar",
    "format_float",
]

MAGIC = b"LLSCKPT\x00"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<8sI32sqI")


class CheckpointFormatError(ValueError):
    pass


def format_float(x):
    return "%.17g" % x


def _hash_bytes(spec_hash):
    if not spec_hash:
        return bytes(32)
    raw = bytes.fromhex(spec_hash)
    if len(raw) != 32:
        raise ValueError(f"spec hash must be 32 bytes of hex, got {spec_hash!r}")
    return raw


def write_container(path, data, layout, epoch=0, meta=None, spec=None):
    meta = dict(meta or {})
    meta["layout"] = layout.to_table()
    if spec is not None:
        meta["spec"] = spec.to_text()
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    data = np.ascontiguousarray(data, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_HEAD.pack(MAGIC, FORMAT_VERSION, _hash_bytes(layout.spec_hash), int(epoch), len(blob)))
        f.write(blob)
        f.write(struct.pack("<Q", data.size))
        f.write(data.tobytes())


def read_container(path):
    """``(data, layout, epoch, meta)`` from a container file."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < _HEAD.size:
        raise CheckpointFormatError(f"{path}: {len(buf)} bytes is too short for a checkpoint header")
    magic, version, raw_hash, epoch, n_meta = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {version}")
    pos = _HEAD.size
    if len(buf) < pos + n_meta + 8:
        raise CheckpointFormatError(f"{path}: truncated metadata")
    meta = json.loads(buf[pos : pos + n_meta].decode("utf-8"))
    pos += n_meta
    (count,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    if len(buf) != pos + 8 * count:
        raise CheckpointFormatError(f"{path}: expected {count} values, file holds {(len(buf) - pos) / 8:g}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(np.float64)
    layout = Layout.from_table(meta.pop("layout"))
    if _hash_bytes(layout.spec_hash) != raw_hash:
        raise CheckpointFormatError(f"{path}: header spec hash does not match the layout table")
    if layout.size != count:
        raise CheckpointFormatError(f"{path}: layout describes {layout.size} values, file holds {count}")
    return data, layout, epoch, meta


def save_params(path, params, epoch=0, spec=None, meta=None):
    write_container(path, params.data, params.layout, epoch, meta, spec)


def load_params(path):
    """``(ParamVector, epoch, meta)``; ``meta["spec"]`` is a :class:`ModelSpec` when stored."""
    data, layout, epoch, meta = read_container(path)
    if "spec" in meta:
        meta["spec"] = ModelSpec.from_text(meta["spec"])
    return ParamVector(data, layout), epoch, meta


def save_direction(path, d, meta=None):
    m = dict(meta or {})
    m["direction"] = {"scheme": d.scheme, "ignore": d.ignore, "seed": d.seed, "dir_type": d.dir_type}
    write_container(path, d.data, d.layout, -1, m)


def load_direction(path):
    data, layout, _, meta = read_container(path)
    info = meta.get("direction")
    if info is None:
        raise CheckpointFormatError(f"{path}: file holds parameters, not a direction")
    return Direction(data, layout, info["scheme"], info["ignore"], info["seed"], info["dir_type"])


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _header_lines(meta, axes):
    lines = []
    names = ("x", "y")
    for name, a in zip(names, axes):
        lines.append(f"# axis_{name} = {a}")
    for key in sorted(meta):
        val = str(meta[key]).replace("\n", " ")
        lines.append(f"# {key} = {val}")
    return lines


def _write_table(path, meta, axes, columns, values):
    coords = [a.points() for a in axes]
    coord_names = ["alpha", "beta"][: len(axes)]
    lines = _header_lines(meta, axes)
    lines.append(",".join(coord_names + list(columns)))
    for idx in np.ndindex(*(a.steps for a in axes)):
        row = [format_float(coords[k][i]) for k, i in enumerate(idx)]
        row += [format_float(values[c][idx]) for c in columns]
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def _read_table(path):
    meta, rows, header = {}, [], None
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no column header")
    axes = [AxisSpec.parse(meta.pop(f"axis_{n}")) for n in ("x", "y") if f"axis_{n}" in meta]
    shape = tuple(a.steps for a in axes)
    arr = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    if arr.shape[0] != int(np.prod(shape)):
        raise ValueError(f"{path}: {arr.shape[0]} rows, axes need {int(np.prod(shape))}")
    values = {name: arr[:, k].reshape(shape) for k, name in enumerate(header) if name not in ("alpha", "beta")}
    return tuple(axes), values, meta


def write_grid_csv(path, grid):
    meta = dict(grid.meta)
    if grid.overflow.any():
        meta["overflow_cells"] = " ".join(
            ":".join(str(i) for i in idx) for idx in zip(*np.nonzero(grid.overflow))
        )
    _write_table(path, meta, grid.axes, LOSS_COLUMNS, grid.values)


def read_grid_csv(path):
    axes, values, meta = _read_table(path)
    overflow = np.zeros(tuple(a.steps for a in axes), dtype=bool)
    cells = meta.pop("overflow_cells", "")
    for item in cells.split():
        overflow[tuple(int(i) for i in item.split(":"))] = True
    return LossGrid(axes, values, meta, overflow)


def write_ratio_csv(path, emap):
    _write_table(path, emap.meta, emap.axes, ("lmin", "lmax", "ratio"), emap.values)


def read_ratio_csv(path):
    axes, values, meta = _read_table(path)
    return EigRatioMap(axes, values["lmin"], values["lmax"], values["ratio"], meta)


def write_projection_csv(path, epochs, coords, lr_drop, meta=None):
    lines = [f"# {k} = {v}" for k, v in sorted((meta or {}).items())]
    lines.append("epoch,u,v,is_lr_drop")
    for e, (u, v), d in zip(epochs, coords, lr_drop):
        lines.append(f"{int(e)},{format_float(u)},{format_float(v)},{int(bool(d))}")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_projection_csv(path):
    """``(epochs, coords, lr_drop, meta)``."""
    meta, rows = {}, []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line and not line.startswith("epoch"):
                e, u, v, d = line.split(",")
                rows.append((int(e), float(u), float(v), d == "1"))
    epochs = [r[0] for r in rows]
    coords = np.array([[r[1], r[2]] for r in rows], dtype=np.float64).reshape(-1, 2)
    lr_drop = np.array([r[3] for r in rows], dtype=bool)
    return epochs, coords, lr_drop, meta


# ---------------------------------------------------------------------------
# sidecar
# ---------------------------------------------------------------------------


def write_sidecar(path, fields):
    """Plain ``key = value`` lines, keys sorted."""
    with open(path, "w", newline="\n") as f:
        for key in sorted(fields):
            f.write(f"{key} = {str(fields[key]).replace(chr(10), ' ')}\n")


def read_sidecar(path):
    out = {}
    with open(path) as f:
        for line in f:
            if "=" in line:
                key, _, val = line.partition("=")
                out[key.strip()] = val.strip()
    return out
