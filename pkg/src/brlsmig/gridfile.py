"""Binary gridded-data format and PGM rendering.

A grid file is a 56-byte header followed by the payload:

====== ====== =======================================================
offset size   contents
====== ====== =======================================================
0      4      magic ``BRG1``
4      4      n1, uint32 LE (fast axis: depth or time)
8      4      n2, uint32 LE (slow axis: lateral or trace)
12     8      d1, float64 LE (fast-axis spacing)
20     8      d2, float64 LE (slow-axis spacing)
28     8      o1, float64 LE (fast-axis origin)
36     8      o2, float64 LE (slow-axis origin)
44     12     kind, ASCII NUL-padded: velocity | reflectivity |
              image | gather
56     4*n1*n2  payload, float32 LE, fast axis contiguous
====== ====== =======================================================

Payload precision is single on disk; in-memory arithmetic stays double.
Write-then-read reproduces the payload bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["GridFile", "GridFileError", "read_grid", "write_grid", "pgm_bytes", "write_pgm"]

MAGIC = b"BRG1"
KINDS = ("velocity", "reflectivity", "image", "gather")
_HEADER = struct.Struct("<4sII4d12s")


class GridFileError(ValueError):
    """Raised for malformed or inconsistent grid files."""


@dataclass(frozen=True)
class GridFile:
    """One gridded field: (n1, n2) float32 values plus axis metadata."""

    values: np.ndarray
    d1: float
    d2: float
    o1: float = 0.0
    o2: float = 0.0
    kind: str = "image"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise GridFileError(f"grid values must be 2-D, got shape {v.shape}")
        if self.kind not in KINDS:
            raise GridFileError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("d1", "d2", "o1", "o2"):
            if not np.isfinite(getattr(self, name)):
                raise GridFileError(f"header value {name} is not finite")
        object.__setattr__(self, "values", v)

    @property
    def n1(self) -> int:
        return self.values.shape[0]

    @property
    def n2(self) -> int:
        return self.values.shape[1]


def write_grid(path, grid: GridFile) -> None:
    header = _HEADER.pack(
        MAGIC,
        grid.n1,
        grid.n2,
        grid.d1,
        grid.d2,
        grid.o1,
        grid.o2,
        grid.kind.encode("ascii"),
    )
    payload = np.ascontiguousarray(grid.values, dtype="<f4").tobytes(order="F")
    Path(path).write_bytes(header + payload)


def read_grid(path) -> GridFile:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GridFileError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n1, n2, d1, d2, o1, o2, kind_raw = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise GridFileError(f"{path}: bad magic {magic!r}")
    kind = kind_raw.rstrip(b"\x00").decode("ascii", errors="replace")
    if kind not in KINDS:
        raise GridFileError(f"{path}: unknown grid kind {kind!r}")
    expected = _HEADER.size + 4 * n1 * n2
    if len(raw) != expected:
        raise GridFileError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, header "
            f"promises {4 * n1 * n2}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(
        (n1, n2), order="F"
    )
    grid = GridFile(values=values.copy(), d1=d1, d2=d2, o1=o1, o2=o2, kind=kind)
    return grid


def pgm_bytes(values, clip_percentile: float = 98.0) -> bytes:
    """Render values to a binary 8-bit PGM (P5).

    Values are mapped linearly from [-c, +c] to [0, 255] with c the given
    percentile of |values|; zero maps to mid-gray.  Output is n2 pixels
    wide and n1 tall.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise GridFileError(f"can only render 2-D grids, got shape {v.shape}")
    if not (0 < clip_percentile <= 100):
        raise ValueError(f"clip_percentile must be in (0, 100], got {clip_percentile}")
    c = float(np.percentile(np.abs(v), clip_percentile))
    if c == 0.0:
        pixels = np.full(v.shape, 128, dtype=np.uint8)
    else:
        pixels = np.clip(np.rint((v + c) / (2.0 * c) * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode("ascii")
    return header + pixels.tobytes(order="C")


def write_pgm(path, values, clip_percentile: float = 98.0) -> None:
    Path(path).write_bytes(pgm_bytes(values, clip_percentile))
