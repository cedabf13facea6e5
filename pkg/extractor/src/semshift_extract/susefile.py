"""Writer for the semshift binary matrix layout.

Implemented from the wire format alone (magic ``SUSE``, little-endian u32
version/rows/dims header, float32 row-major payload, sibling ``.ids`` text
file) so the two packages stay coupled only through bytes on disk.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"SUSE"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def ids_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".ids")


def write_matrix(data: np.ndarray, ids: Sequence[str], path: str | Path) -> None:
    """Write rows and the aligned id file; validates before touching disk."""
    data = np.ascontiguousarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {data.shape}")
    if data.shape[0] != len(ids):
        raise ValueError(f"{len(ids)} ids for {data.shape[0]} rows")
    if data.size and not np.isfinite(data).all():
        raise ValueError("refusing to write NaN/Inf embeddings")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[0], data.shape[1]))
        fh.write(data.tobytes(order="C"))
    with open(ids_path(path), "w", encoding="utf-8", newline="\n") as fh:
        for ident in ids:
            fh.write(ident)
            fh.write("\n")
