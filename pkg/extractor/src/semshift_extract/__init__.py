"""Contextualized target-word embedding extraction."""

from .encoders import HuggingFaceEncoder, ToyEncoder, build_encoder
from .extract import ExtractionError, ExtractionJob, extract_embeddings, mark_target
from .susefile import write_matrix

__all__ = [
    "HuggingFaceEncoder",
    "ToyEncoder",
    "build_encoder",
    "ExtractionError",
    "ExtractionJob",
    "extract_embeddings",
    "mark_target",
    "write_matrix",
]

__version__ = "0.1.0"
