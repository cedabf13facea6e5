"""Synthetic benchmark: pseudo-words with known sense-frequency shifts.

Each pseudo-word gets 2-4 sense directions on the unit sphere (orthogonal up
to rotation), an old-period sense distribution, and a modern distribution
shifted by a word-specific strength between 0 (stable) and 1 (a sense fully
disappears).  Odd-indexed words also hold out one sense from the old period
entirely so that emergence and the imputation path get exercised.  Instance
embeddings are their sense direction plus Gaussian noise, renormalized.

Ground truth lives in the instance sense labels; gold distributions and
change scores derived from them feed the evaluation protocol as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import Period, UsageInstance, WordDataset, assemble_word_dataset
from .matrixio import EmbeddingMatrix


@dataclass(frozen=True)
class SyntheticConfig:
    n_words: int = 20
    instances_per_period: int = 100
    dims: int = 16
    noise: float = 0.08
    seed: int = 7


def _largest_remainder_counts(probabilities: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` proportional to probabilities."""
    raw = probabilities * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _sense_distributions(n_senses: int, strength: float, emergence: bool):
    """Old/modern sense probabilities for one pseudo-word."""
    p_old = np.full(n_senses, 1.0 / n_senses)
    if emergence:
        # the last sense exists only in the modern period
        p_old = np.zeros(n_senses)
        p_old[: n_senses - 1] = 1.0 / (n_senses - 1)
    p_new = p_old.copy()
    moved = p_old[0] * strength
    p_new[0] -= moved
    p_new[-1] += moved
    if n_senses >= 4:
        moved = p_old[1] * 0.5 * strength
        p_new[1] -= moved
        p_new[-2] += moved
    return p_old, p_new


def _sense_directions(rng: np.random.Generator, n_senses: int, dims: int) -> np.ndarray:
    gaussian = rng.normal(size=(dims, dims))
    q, _ = np.linalg.qr(gaussian)
    return q[:n_senses]


def generate_benchmark(
    config: SyntheticConfig = SyntheticConfig(),
) -> tuple[list[WordDataset], EmbeddingMatrix]:
    """Pseudo-word datasets plus one pooled embedding matrix."""
    rng = np.random.default_rng(config.seed)
    datasets: list[WordDataset] = []
    vectors: list[np.ndarray] = []
    ids: list[str] = []

    for w in range(config.n_words):
        word = f"word{w:02d}"
        word_rng = np.random.default_rng([config.seed, w])
        n_senses = 2 + (w % 3)
        strength = w / max(config.n_words - 1, 1)
        emergence = (w % 2 == 1) and n_senses >= 3
        p_old, p_new = _sense_distributions(n_senses, strength, emergence)
        directions = _sense_directions(word_rng, n_senses, config.dims)
        x = _largest_remainder_counts(p_old, config.instances_per_period)
        y = _largest_remainder_counts(p_new, config.instances_per_period)

        instances = []
        for period, tag, counts in ((Period.OLD, "old", x), (Period.MODERN, "new", y)):
            index = 0
            for sense, count in enumerate(counts):
                for _ in range(count):
                    ident = f"{word}:{tag}:{index:03d}"
                    context = f"{word} synthetic usage {index}"
                    instances.append(
                        UsageInstance(
                            id=ident,
                            word=word,
                            period=period,
                            context=context,
                            target_start=0,
                            target_end=len(word.encode("utf-8")),
                            gold_sense=sense,
                        )
                    )
                    point = directions[sense] + config.noise * word_rng.normal(
                        size=config.dims
                    )
                    vectors.append(point / np.linalg.norm(point))
                    ids.append(ident)
                    index += 1
        datasets.append(assemble_word_dataset(instances, word))

    matrix = EmbeddingMatrix(np.asarray(vectors), tuple(ids))
    return datasets, matrix


def expected_shift_signs(dataset: WordDataset) -> dict[str, int]:
    """Ground-truth shift direction per instance of senses whose relative
    frequency changed; instances of unshifted senses are omitted."""
    from .ingest import build_gold_sfd

    sfd = build_gold_sfd(dataset)
    p = sfd.p
    q = sfd.q
    signs: dict[str, int] = {}
    for inst in dataset.all_instances():
        if inst.gold_sense is None:
            continue
        k = sfd.index_of(inst.gold_sense)
        if abs(q[k] - p[k]) < 1e-12:
            continue
        signs[inst.id] = 1 if q[k] > p[k] else -1
    return signs
