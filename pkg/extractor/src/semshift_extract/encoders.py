"""Token encoders: anything that turns a batch of texts into per-token
embedding stacks can drive the extractor.

``HuggingFaceEncoder`` wraps any transformers model that exposes per-token
hidden states (the documented default is the XL-LEXEME checkpoint
``pierluigic/xl-lexeme``, hidden size 1024).  ``ToyEncoder`` is a tiny
deterministic encoder for tests and offline smoke runs: whitespace tokens,
embeddings drawn from a generator seeded by the token's bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np


@dataclass(frozen=True)
class TokenBatch:
    """Per-token embeddings for one text: (tokens, dims) plus the character
    span each token covers in the text."""

    embeddings: np.ndarray
    spans: tuple[tuple[int, int], ...]


class Encoder(Protocol):
    dims: int

    def encode_batch(self, texts: Sequence[str]) -> list[TokenBatch]: ...


class ToyEncoder:
    """Deterministic hash-seeded encoder over whitespace tokens."""

    def __init__(self, dims: int = 16):
        self.dims = dims

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        vector = rng.standard_normal(self.dims)
        return vector / np.linalg.norm(vector)

    def encode_batch(self, texts: Sequence[str]) -> list[TokenBatch]:
        batches = []
        for text in texts:
            spans = []
            vectors = []
            position = 0
            for token in text.split():
                start = text.index(token, position)
                end = start + len(token)
                position = end
                spans.append((start, end))
                vectors.append(self._token_vector(token))
            if not vectors:
                vectors = [np.zeros(self.dims)]
                spans = [(0, 0)]
            batches.append(TokenBatch(np.asarray(vectors), tuple(spans)))
        return batches


class HuggingFaceEncoder:
    """Per-token last hidden states from a transformers model.

    Deterministic by construction: eval mode, no dropout, no gradient.  The
    model and tokenizer can be passed in directly (handy for tests with
    randomly initialized weights) or loaded from a model id.
    """

    def __init__(self, model_id: str | None = None, model=None, tokenizer=None,
                 device: str = "cpu", max_length: int = 512):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        if model is None or tokenizer is None:
            if not model_id:
                raise ValueError("need a model id or explicit model and tokenizer")
            tokenizer = AutoTokenizer.from_pretrained(model_id)
            model = AutoModel.from_pretrained(model_id)
        self.tokenizer = tokenizer
        self.model = model.to(device).eval()
        self.device = device
        self.max_length = max_length
        self.dims = int(self.model.config.hidden_size)

    def encode_batch(self, texts: Sequence[str]) -> list[TokenBatch]:
        torch = self._torch
        encoded = self.tokenizer(
            list(texts),
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_offsets_mapping=True,
        )
        offsets = encoded.pop("offset_mapping")
        encoded = {k: v.to(self.device) for k, v in encoded.items()}
        with torch.no_grad():
            hidden = self.model(**encoded).last_hidden_state.cpu().numpy()
        mask = encoded["attention_mask"].cpu().numpy().astype(bool)
        batches = []
        for row in range(hidden.shape[0]):
            keep = mask[row]
            spans = tuple(
                (int(start), int(end)) for start, end in offsets[row][keep].tolist()
            )
            batches.append(TokenBatch(hidden[row][keep].astype(np.float64), spans))
        return batches


def build_encoder(model_id: str, device: str = "cpu") -> Encoder:
    """Encoder from a model spec string; ``toy`` or ``toy:<dims>`` gives the
    offline test encoder, anything else loads a transformers checkpoint."""
    if model_id == "toy" or model_id.startswith("toy:"):
        dims = int(model_id.split(":", 1)[1]) if ":" in model_id else 16
        return ToyEncoder(dims)
    return HuggingFaceEncoder(model_id=model_id, device=device)
