"""Per-instance sense usage shift derived from a transport plan.

For old-side instance i with weight a_i and modern-side instance j with
weight b_j, the shift values are

    alpha_i = -(a_i - sum_j T_ij) / a_i      (>= -1 for nonnegative plans)
    beta_j  =  (b_j - sum_i T_ij) / b_j      (<= +1)

A positive value means the word's usage in that instance's sense became
relatively more frequent in the modern corpus, a negative value less
frequent.  With equal instance counts and uniform weights the values sum to
zero across both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .otcore import TransportPlan


@dataclass(frozen=True)
class SusScores:
    """Shift per old-side instance (``alpha``) and modern-side instance (``beta``)."""

    alpha: np.ndarray
    beta: np.ndarray

    def pooled(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def max_abs(self) -> float:
        return float(np.abs(self.pooled()).max())


def compute_sus(
    plan: TransportPlan | np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    row_ids: Sequence[str] | None = None,
    col_ids: Sequence[str] | None = None,
) -> SusScores:
    """Normalized alignment excess/deficit at every instance."""
    matrix = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if matrix.shape != (a.size, b.size):
        raise ValueError(f"plan shape {matrix.shape} does not match weights ({a.size}, {b.size})")
    for weights, ids, side in ((a, row_ids, "old"), (b, col_ids, "modern")):
        zero = np.flatnonzero(weights <= 0.0)
        if zero.size:
            name = ids[zero[0]] if ids is not None else f"index {zero[0]}"
            raise ValueError(f"zero weight for {side} instance {name}")
    alpha = -(a - matrix.sum(axis=1)) / a
    beta = (b - matrix.sum(axis=0)) / b
    return SusScores(alpha=alpha, beta=beta)
