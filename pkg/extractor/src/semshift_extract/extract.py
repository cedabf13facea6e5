"""Target-marked embedding extraction.

For each usage instance the target byte span is wrapped in delimiter tokens
(``<t>`` ... ``</t>``), the marked context goes through the encoder, and the
instance embedding is the mean over all token embeddings of the sequence.
``target_only=True`` instead averages only the tokens overlapping the target
span, exposed for comparison.  Rows are written in input order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import Encoder, build_encoder
from .susefile import write_matrix

OPEN_MARK = "<t>"
CLOSE_MARK = "</t>"


class ExtractionError(Exception):
    pass


@dataclass(frozen=True)
class ExtractionJob:
    model: str
    input_path: str
    output_path: str
    batch_size: int = 32
    device: str = "cpu"
    target_only: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")


@dataclass(frozen=True)
class MarkedInstance:
    id: str
    text: str
    target_start: int  # character offsets into the marked text
    target_end: int


def load_instances(path: str | Path) -> list[dict]:
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                for key in ("id", "context", "target_start", "target_end"):
                    if key not in obj:
                        raise KeyError(key)
            except (json.JSONDecodeError, KeyError) as exc:
                raise ExtractionError(f"{path}:{line_no}: bad instance record ({exc})")
            instances.append(obj)
    return instances


def mark_target(record: dict) -> MarkedInstance:
    """Insert delimiter tokens around the target byte span."""
    context = record["context"]
    raw = context.encode("utf-8")
    start, end = record["target_start"], record["target_end"]
    if not (0 <= start < end <= len(raw)):
        raise ExtractionError(
            f"instance {record['id']!r}: target span {start}:{end} outside context"
        )
    try:
        prefix = raw[:start].decode("utf-8")
        target = raw[start:end].decode("utf-8")
    except UnicodeDecodeError:
        raise ExtractionError(
            f"instance {record['id']!r}: target span splits a multi-byte character"
        ) from None
    suffix = raw[end:].decode("utf-8")
    text = f"{prefix}{OPEN_MARK} {target} {CLOSE_MARK}{suffix}"
    marked_start = len(prefix)
    marked_end = marked_start + len(OPEN_MARK) + len(target) + len(CLOSE_MARK) + 2
    return MarkedInstance(record["id"], text, marked_start, marked_end)


def _pool(batch, marked: MarkedInstance, target_only: bool) -> np.ndarray:
    if not target_only:
        return batch.embeddings.mean(axis=0)
    keep = [
        k
        for k, (start, end) in enumerate(batch.spans)
        if start < marked.target_end and end > marked.target_start
    ]
    if not keep:
        raise ExtractionError(
            f"instance {marked.id!r}: tokenizer produced no tokens over the target span"
        )
    return batch.embeddings[keep].mean(axis=0)


def extract_embeddings(job: ExtractionJob, encoder: Encoder | None = None) -> int:
    """Write one embedding row per instance; returns the row count."""
    if encoder is None:
        encoder = build_encoder(job.model, job.device)
    records = load_instances(job.input_path)
    marked = [mark_target(r) for r in records]

    rows = np.zeros((len(marked), encoder.dims), dtype=np.float64)
    for offset in range(0, len(marked), job.batch_size):
        chunk = marked[offset : offset + job.batch_size]
        batches = encoder.encode_batch([m.text for m in chunk])
        for k, (batch, instance) in enumerate(zip(batches, chunk)):
            if batch.embeddings.shape[1] != encoder.dims:
                raise ExtractionError(
                    f"encoder returned {batch.embeddings.shape[1]} dims, "
                    f"declared {encoder.dims}"
                )
            rows[offset + k] = _pool(batch, instance, job.target_only)

    write_matrix(rows, [m.id for m in marked], job.output_path)
    return len(marked)
