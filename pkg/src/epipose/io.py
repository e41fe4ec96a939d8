"""File formats: correspondence CSV, KITTI poses, EPHM maps, matrix text.

All floats are written with 17 significant digits so values survive a
write/read cycle bit for bit.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import ParseError

FLOAT_FMT = "%.17g"
CSV_HEADER = ["u1", "v1", "u2", "v2"]
EPHM_MAGIC = b"EPHM"


def fmt(x: float) -> str:
    return FLOAT_FMT % x


def _parse_floats(fields, line_no):
    try:
        values = [float(f) for f in fields]
    except ValueError:
        raise ParseError(f"non-numeric field in {fields!r}", line_no) from None
    if not all(np.isfinite(values)):
        raise ParseError("non-finite value", line_no)
    return values


def read_correspondences(path):
    """Read ``u1,v1,u2,v2[,weight]`` CSV; returns ``(corr, weights or None)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0].strip() == "":
        raise ParseError("empty file", 1)
    header = [h.strip() for h in lines[0].strip().split(",")]
    if header not in (CSV_HEADER, CSV_HEADER + ["weight"]):
        raise ParseError(f"expected header u1,v1,u2,v2[,weight], got {','.join(header)}", 1)
    ncol = len(header)
    rows = []
    for k, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != ncol:
            raise ParseError(f"expected {ncol} fields, got {len(fields)}", k)
        rows.append(_parse_floats(fields, k))
    data = np.array(rows, dtype=float).reshape(-1, ncol)
    weights = data[:, 4].copy() if ncol == 5 else None
    if weights is not None and np.any(weights < 0):
        raise ParseError("weights must be nonnegative")
    return data[:, :4].copy(), weights


def write_correspondences(path, corr, weights=None):
    corr = np.asarray(corr, dtype=float).reshape(-1, 4)
    header = CSV_HEADER + (["weight"] if weights is not None else [])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for k, row in enumerate(corr):
            vals = list(row) + ([weights[k]] if weights is not None else [])
            fh.write(",".join(fmt(v) for v in vals) + "\n")


def read_kitti_poses(path) -> np.ndarray:
    """One camera-to-world pose per line: the 12 row-major entries of ``[R | t]``."""
    poses = []
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 12:
                raise ParseError(f"expected 12 values, got {len(fields)}", k)
            poses.append(_parse_floats(fields, k))
    return np.array(poses, dtype=float).reshape(-1, 3, 4)


def write_kitti_poses(path, poses):
    poses = np.asarray(poses, dtype=float).reshape(-1, 12)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in poses:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_matrix(path, shape=(3, 3)) -> np.ndarray:
    """Whitespace/comma separated numbers, row-major."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    fields = text.replace(",", " ").split()
    n = int(np.prod(shape))
    if len(fields) != n:
        raise ParseError(f"expected {n} numbers, got {len(fields)}")
    return np.array(_parse_floats(fields, None)).reshape(shape)


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in M:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def write_ephm(path, data):
    """Write an ``(H, W)`` or ``(H, W, D)`` array as EPHM.

    Layout: ``b"EPHM"``, then little-endian u32 ``H, W, D``, then ``H*W*D``
    little-endian float32 values in row-major ``(H, W, D)`` order.
    """
    a = np.asarray(data, dtype="<f4")
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError("EPHM data must be 2-D or 3-D")
    H, W, D = a.shape
    with open(path, "wb") as fh:
        fh.write(EPHM_MAGIC + struct.pack("<3I", H, W, D))
        fh.write(np.ascontiguousarray(a).tobytes())


def read_ephm(path) -> np.ndarray:
    """Read an EPHM file into a float32 ``(H, W, D)`` array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != EPHM_MAGIC:
        raise ParseError("not an EPHM file (bad magic)")
    H, W, D = struct.unpack("<3I", blob[4:16])
    expected = 16 + 4 * H * W * D
    if len(blob) != expected:
        raise ParseError(f"EPHM size mismatch: header implies {expected} bytes, file has {len(blob)}")
    return np.frombuffer(blob, dtype="<f4", offset=16).reshape(H, W, D).astype(np.float32)


def load_heatmap(path) -> np.ndarray:
    a = read_ephm(path)
    if a.shape[2] != 1:
        raise ParseError(f"heatmap must have D = 1, got D = {a.shape[2]}")
    return a[:, :, 0].astype(float)


def load_descriptor_map(path) -> np.ndarray:
    return read_ephm(path).astype(float)
