"""Sense induction by affinity propagation over pooled embeddings.

Old and modern embeddings of a word are clustered jointly (old rows first)
with standard responsibility/availability message passing.  Cluster counts
per period give an estimated sense frequency distribution; per-cluster mean
vectors give sense prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ingest import Period, SenseFrequencyDistribution

MEDIAN = "median"


@dataclass(frozen=True)
class ClusterAssignment:
    """Labels in 0..n_clusters-1 per pooled instance, exemplar indices
    aligned with cluster ids, and the run's parameters."""

    labels: np.ndarray
    exemplars: np.ndarray
    damping: float
    n_clusters: int
    converged: bool
    iterations: int


def affinity_propagation(
    similarity: np.ndarray,
    damping: float = 0.5,
    preference: float | str = MEDIAN,
    max_iter: int = 500,
    convergence_iter: int = 20,
) -> ClusterAssignment:
    """Cluster by message passing on a symmetric similarity matrix.

    ``preference`` sets the diagonal self-similarities; the default uses the
    median off-diagonal similarity.  A tiny index-proportional offset
    (-1e-12 * index) is added to the preferences so exemplar ties resolve
    to the lowest index deterministically.  Convergence means the exemplar
    set stayed fixed for ``convergence_iter`` consecutive rounds; without
    convergence the current assignment is returned flagged.
    """
    s = np.array(similarity, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"similarity must be square, got shape {s.shape}")
    n = s.shape[0]
    if n == 0:
        raise ValueError("cannot cluster zero points")
    if not (0.5 <= damping < 1.0):
        raise ValueError(f"damping must lie in [0.5, 1.0), got {damping}")
    if n == 1:
        return ClusterAssignment(
            labels=np.zeros(1, dtype=np.int64),
            exemplars=np.zeros(1, dtype=np.int64),
            damping=damping,
            n_clusters=1,
            converged=True,
            iterations=0,
        )

    if preference == MEDIAN:
        off_diag = s[~np.eye(n, dtype=bool)]
        pref = float(np.median(off_diag))
    else:
        pref = float(preference)
    idx = np.arange(n)
    s[idx, idx] = pref - 1e-12 * idx

    r = np.zeros((n, n))
    av = np.zeros((n, n))
    stable_rounds = 0
    current = frozenset()
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        # responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
        tmp = av + s
        first = np.argmax(tmp, axis=1)
        first_val = tmp[idx, first]
        tmp[idx, first] = -np.inf
        second_val = tmp.max(axis=1)
        r_new = s - first_val[:, None]
        r_new[idx, first] = s[idx, first] - second_val
        r = damping * r + (1.0 - damping) * r_new

        # availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        rp = np.maximum(r, 0.0)
        rp[idx, idx] = r[idx, idx]
        col = rp.sum(axis=0)
        a_new = col[None, :] - rp
        diag = a_new[idx, idx]  # sum_{i' != k} max(0, r(i',k))
        a_new = np.minimum(a_new, 0.0)
        a_new[idx, idx] = diag
        av = damping * av + (1.0 - damping) * a_new

        exemplars = frozenset(np.flatnonzero(np.diag(r) + np.diag(av) > 0.0).tolist())
        if exemplars == current:
            stable_rounds += 1
            if stable_rounds >= convergence_iter:
                converged = True
                break
        else:
            current = exemplars
            stable_rounds = 0

    exemplar_idx = np.array(sorted(current), dtype=np.int64)
    if exemplar_idx.size == 0:
        # fully symmetric inputs yield no strictly positive criterion; the
        # single best candidate still gives a usable one-cluster result
        exemplar_idx = np.array([int(np.argmax(np.diag(r) + np.diag(av)))], dtype=np.int64)

    labels = np.argmax(s[:, exemplar_idx], axis=1)
    labels[exemplar_idx] = np.arange(exemplar_idx.size)
    return ClusterAssignment(
        labels=labels.astype(np.int64),
        exemplars=exemplar_idx,
        damping=damping,
        n_clusters=int(exemplar_idx.size),
        converged=converged,
        iterations=iterations,
    )


def cosine_similarity_matrix(embeddings: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities of row vectors."""
    data = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(data, axis=1)
    if (norms <= 1e-12).any():
        raise ValueError("zero-norm row in similarity computation")
    unit = data / norms[:, None]
    return unit @ unit.T


def estimate_sfd(
    assignment: ClusterAssignment, periods: Sequence[Period]
) -> SenseFrequencyDistribution:
    """Per-cluster counts split by period; inventory 0..n_clusters-1."""
    if len(periods) != assignment.labels.size:
        raise ValueError(
            f"{len(periods)} periods for {assignment.labels.size} labels"
        )
    k = assignment.n_clusters
    x = np.zeros(k, dtype=np.int64)
    y = np.zeros(k, dtype=np.int64)
    for label, period in zip(assignment.labels, periods):
        if period is Period.OLD:
            x[label] += 1
        else:
            y[label] += 1
    return SenseFrequencyDistribution(sense_ids=tuple(range(k)), x=x, y=y)


def sense_prototypes(
    assignment: ClusterAssignment,
    embeddings: np.ndarray,
    periods: Sequence[Period],
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-period mean embedding of every cluster.

    Clusters with no instances in a period are omitted from that period's
    list, so the two lists can differ in length.
    """
    data = np.asarray(embeddings, dtype=np.float64)
    if data.shape[0] != assignment.labels.size or len(periods) != assignment.labels.size:
        raise ValueError("embeddings, labels and periods must align")
    period_arr = np.array([p is Period.OLD for p in periods])
    old_protos: list[np.ndarray] = []
    modern_protos: list[np.ndarray] = []
    for k in range(assignment.n_clusters):
        in_cluster = assignment.labels == k
        old_rows = data[in_cluster & period_arr]
        modern_rows = data[in_cluster & ~period_arr]
        if old_rows.shape[0]:
            old_protos.append(old_rows.mean(axis=0))
        if modern_rows.shape[0]:
            modern_protos.append(modern_rows.mean(axis=0))
    return old_protos, modern_protos
