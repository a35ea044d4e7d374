"""CSV party tables and binary share files.

Share file layout (little-endian)::

    b"BFRS" | version u16 | c u64 | m u64 | ell u16 | c*m ring elements
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .join import PartyTable
from .misfa import JoinOutputShare
from .ring import Ring, ring_of

SHARE_MAGIC = b"BFRS"
SHARE_VERSION = 1
_SHARE_HEADER = struct.Struct("<4sHQQH")


def read_table(path: str | Path, ring: Ring = Ring()) -> PartyTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ShapeError(f"{path}: empty file") from None
        if not header or header[0].strip().lower() != "id":
            raise ShapeError(f"{path}: header must start with 'id'")
        m = len(header) - 1
        ids, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != m + 1:
                raise ShapeError(f"{path}:{lineno}: expected {m + 1} columns, found {len(rec)}")
            ids.append(rec[0].encode())
            vals = [int(v) for v in rec[1:]]
            if any(v < 0 or v >= ring.modulus for v in vals):
                raise ShapeError(f"{path}:{lineno}: feature outside [0, 2^{ring.ell})")
            rows.append(vals)
    feats = np.array(rows, dtype=ring.dtype).reshape(len(ids), m) if rows else ring.zeros(0, m)
    return PartyTable(tuple(ids), feats)


def write_table(path: str | Path, table: PartyTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"f{k + 1}" for k in range(table.m)])
        for ident, row in zip(table.ids, table.features.tolist()):
            w.writerow([ident.decode()] + row)


def write_share(path: str | Path, data: np.ndarray | JoinOutputShare) -> None:
    if isinstance(data, JoinOutputShare):
        data = data.data
    ring = ring_of(data)
    c, m = data.shape
    with open(path, "wb") as fh:
        fh.write(_SHARE_HEADER.pack(SHARE_MAGIC, SHARE_VERSION, c, m, ring.ell))
        fh.write(ring.encode(data))


def read_share(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if len(buf) < _SHARE_HEADER.size:
        raise ShapeError(f"{path}: truncated share file")
    magic, version, c, m, ell = _SHARE_HEADER.unpack_from(buf)
    if magic != SHARE_MAGIC:
        raise ShapeError(f"{path}: not a share file (magic {magic!r})")
    if version != SHARE_VERSION:
        raise ShapeError(f"{path}: unsupported share file version {version}")
    return Ring(ell).decode(buf[_SHARE_HEADER.size:], c, m)
