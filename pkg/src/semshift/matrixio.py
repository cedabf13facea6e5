"""Embedding matrix storage and cosine-distance costs.

Matrices live in a fixed binary layout so that independently written tools
can exchange them: magic ``SUSE``, little-endian u32 version (currently 1),
u32 row count, u32 dimension, then rows*dims little-endian float32 values in
row-major order.  Row identifiers go to a sibling ``.ids`` text file, one id
per line, aligned with the rows.

Storage is float32; everything downstream computes in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"SUSE"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class MatrixFormatError(Exception):
    """A matrix file violates the binary layout."""


class BadMagicError(MatrixFormatError):
    pass


class VersionMismatchError(MatrixFormatError):
    pass


class TruncatedPayloadError(MatrixFormatError):
    pass


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense float matrix with one aligned instance id per row."""

    data: np.ndarray
    instance_ids: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {data.shape}")
        if len(self.instance_ids) != data.shape[0]:
            raise ValueError(
                f"{len(self.instance_ids)} ids for {data.shape[0]} rows"
            )
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise ValueError("instance ids are not unique")
        if data.size and not np.isfinite(data).all():
            raise ValueError("matrix contains NaN or Inf entries")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]

    def select(self, ids: Sequence[str]) -> "EmbeddingMatrix":
        """Rows for the given ids, in the given order."""
        pos = {ident: k for k, ident in enumerate(self.instance_ids)}
        missing = [ident for ident in ids if ident not in pos]
        if missing:
            raise KeyError(f"no embedding for instance id {missing[0]!r}")
        rows = np.array([pos[ident] for ident in ids], dtype=np.intp)
        return EmbeddingMatrix(self.data[rows], tuple(ids))


def ids_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".ids")


def write_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write ``path`` in the binary layout plus the sibling id file.

    Validation happens before any bytes are written, so a rejected matrix
    never leaves a partial file behind.
    """
    data = np.ascontiguousarray(matrix.data, dtype=np.float32)
    if data.size and not np.isfinite(data).all():
        raise ValueError("refusing to write NaN/Inf entries")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, matrix.rows, matrix.dims))
        fh.write(data.tobytes(order="C"))
    with open(ids_path(path), "w", encoding="utf-8", newline="\n") as fh:
        for ident in matrix.instance_ids:
            fh.write(ident)
            fh.write("\n")


def read_matrix(path: str | Path) -> EmbeddingMatrix:
    """Load a matrix file, validating magic, version and payload size."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an embedding matrix file")
    _, version, rows, dims = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    expected = rows * dims * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} payload bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dims)

    idfile = ids_path(path)
    ids = tuple(idfile.read_text(encoding="utf-8").splitlines()) if idfile.exists() else ()
    if not ids and rows:
        raise MatrixFormatError(f"{idfile}: missing id file for {rows} rows")
    if len(ids) != rows:
        raise MatrixFormatError(f"{idfile}: {len(ids)} ids for {rows} rows")
    return EmbeddingMatrix(data.astype(np.float64), ids)


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit Euclidean norm."""
    data = np.asarray(matrix.data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=1)
    bad = np.flatnonzero(norms <= 1e-12)
    if bad.size:
        raise ValueError(
            f"row {matrix.instance_ids[bad[0]]!r} has zero norm, cannot normalize"
        )
    return EmbeddingMatrix(data / norms[:, None], matrix.instance_ids)


def cosine_cost(u: EmbeddingMatrix, v: EmbeddingMatrix) -> np.ndarray:
    """Pairwise cosine distances ``1 - cos(u_i, v_j)`` as an (m, n) array."""
    if u.dims != v.dims:
        raise ValueError(f"dimension mismatch: {u.dims} vs {v.dims}")
    un = normalize_rows(u).data
    vn = normalize_rows(v).data
    cost = 1.0 - un @ vn.T
    np.clip(cost, 0.0, 2.0, out=cost)
    return cost
