"""Instance-level and word-level change scores.

Instance level: the log count-ratio tau = ln(Y_k / X_k) of a sense's usage
between the two periods, with disappearance/emergence imputed from the
extreme finite scores of the word set.

Word level, magnitude family (all nonnegative):
    f_sus  = |mean(alpha) - mean(beta)|
    f1     = sum |alpha| + sum |beta|
    f2     = -sum_{alpha < -theta} alpha + sum_{beta > theta} beta
    f3     = <C, T> for the unbalanced plan
    f_ot   = <C, T> for the balanced plan
    f_apd  = mean cosine distance over all cross-period pairs
    f_ldr  = |mean(ldr_old) - mean(ldr_modern)|
    f_widid = JSD of the cluster-estimated sense distributions
    f_apdp = mean Canberra distance between sense prototype vectors

Word level, scope family (signed; positive = broadening):
    g_sus  = ln(Var(beta) / Var(alpha))
    g1     = sum_{alpha < -theta} alpha + sum_{beta > theta} beta
    g_vmf  = ln(kappa_old / kappa_modern)
    g_ldr  = ln(Var(ldr_modern) / Var(ldr_old))
    g_widid = H(Q_hat) - H(P_hat)

All logarithms are natural; variances are population variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .ingest import SenseFrequencyDistribution
from .matrixio import EmbeddingMatrix, cosine_cost
from .otcore import TransportPlan
from .sus import SusScores


class ScoreSource(Enum):
    GOLD = "gold"
    SUS = "sus"
    LDR = "ldr"
    WIDID = "widid"


@dataclass(frozen=True)
class InstanceChangeScore:
    instance_id: str
    tau: float
    source: ScoreSource
    imputed: bool = False


@dataclass
class WordChangeScores:
    """Per-word metric values; fields stay None when inputs were absent or
    the metric is undefined for the word (zero variance, zero kappa)."""

    word: str
    theta: float | None = None
    f_sus: float | None = None
    f1: float | None = None
    f2: float | None = None
    f3: float | None = None
    f_ot: float | None = None
    f_apd: float | None = None
    f_ldr: float | None = None
    f_widid: float | None = None
    f_apdp: float | None = None
    g_sus: float | None = None
    g1: float | None = None
    g_vmf: float | None = None
    g_ldr: float | None = None
    g_widid: float | None = None
    v_s: float | None = None
    v_t: float | None = None
    u_s: float | None = None
    u_t: float | None = None

    def merge(self, other: "WordChangeScores") -> "WordChangeScores":
        if other.word != self.word:
            raise ValueError(f"cannot merge scores of {self.word!r} and {other.word!r}")
        merged = WordChangeScores(word=self.word)
        for f in fields(self):
            if f.name == "word":
                continue
            mine = getattr(self, f.name)
            theirs = getattr(other, f.name)
            setattr(merged, f.name, theirs if theirs is not None else mine)
        return merged


def tau_score(
    sense_index: int,
    x: np.ndarray,
    y: np.ndarray,
    imputation: tuple[float, float],
) -> tuple[float, bool]:
    """Log count-ratio of one sense; returns (tau, imputed).

    Zero modern count means the sense disappeared and takes the lower
    imputation bound; zero old count means it emerged and takes the upper
    bound.  Zero counts on both sides are an error.
    """
    x_k = float(x[sense_index])
    y_k = float(y[sense_index])
    min_tau, max_tau = imputation
    if x_k == 0.0 and y_k == 0.0:
        raise ValueError(f"sense index {sense_index} absent from both periods")
    if y_k == 0.0:
        return min_tau, True
    if x_k == 0.0:
        return max_tau, True
    return math.log(y_k / x_k), False


def _check_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if (p < 0).any():
        raise ValueError(f"{name} has negative entries")
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def entropy(p: np.ndarray) -> float:
    """Shannon entropy, natural log, with 0 * log 0 = 0."""
    p = _check_distribution(p, "distribution")
    positive = p[p > 0]
    return float(-(positive * np.log(positive)).sum())


def jsd(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (natural log), in [0, ln 2]."""
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.size != q.size:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    m = 0.5 * (p + q)
    value = 0.0
    for dist in (p, q):
        mask = dist > 0
        value += 0.5 * float((dist[mask] * np.log(dist[mask] / m[mask])).sum())
    return value


def apd(u: EmbeddingMatrix, v: EmbeddingMatrix) -> float:
    """Average pairwise cosine distance between the two embedding sets."""
    return float(cosine_cost(u, v).mean())


def canberra_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Canberra distance with 0/0 coordinates contributing 0."""
    num = np.abs(x - y)
    den = np.abs(x) + np.abs(y)
    mask = den > 0
    return float((num[mask] / den[mask]).sum())


def canberra_apdp(
    old_prototypes: Sequence[np.ndarray], modern_prototypes: Sequence[np.ndarray]
) -> float:
    """Mean Canberra distance over all prototype pairs across periods."""
    if not old_prototypes or not modern_prototypes:
        missing = "old" if not old_prototypes else "modern"
        raise ValueError(f"no prototypes in {missing} period")
    total = 0.0
    for mu in old_prototypes:
        for nu_ in modern_prototypes:
            total += canberra_distance(np.asarray(mu, float), np.asarray(nu_, float))
    return total / (len(old_prototypes) * len(modern_prototypes))


def threshold_from_ratio(sus_values: Iterable[SusScores], ratio: float) -> float:
    """theta = r * M with M the max |shift| over every instance of the set."""
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    peak = None
    for scores in sus_values:
        m = scores.max_abs()
        peak = m if peak is None else max(peak, m)
    if peak is None:
        raise ValueError("empty shift collection")
    return peak * ratio


def _population_variance(values: np.ndarray) -> float:
    return float(np.var(np.asarray(values, dtype=np.float64)))


def magnitude_suite(
    word: str,
    sus: SusScores | None = None,
    theta: float | None = None,
    uot_plan: TransportPlan | None = None,
    cost: np.ndarray | None = None,
    ot_plan: TransportPlan | None = None,
    u: EmbeddingMatrix | None = None,
    v: EmbeddingMatrix | None = None,
    ldr_old: np.ndarray | None = None,
    ldr_modern: np.ndarray | None = None,
    sfd_hat: SenseFrequencyDistribution | None = None,
    old_prototypes: Sequence[np.ndarray] | None = None,
    modern_prototypes: Sequence[np.ndarray] | None = None,
) -> WordChangeScores:
    """Unsigned change magnitudes; missing inputs leave fields None."""
    out = WordChangeScores(word=word, theta=theta)
    if sus is not None:
        alpha, beta = sus.alpha, sus.beta
        out.f_sus = abs(float(alpha.mean()) - float(beta.mean()))
        out.f1 = float(np.abs(alpha).sum() + np.abs(beta).sum())
        if theta is not None:
            out.f2 = float(-alpha[alpha < -theta].sum() + beta[beta > theta].sum())
    if uot_plan is not None and cost is not None:
        out.f3 = uot_plan.transport_cost(cost)
    if ot_plan is not None and cost is not None:
        out.f_ot = ot_plan.transport_cost(cost)
    if u is not None and v is not None:
        out.f_apd = apd(u, v)
    if ldr_old is not None and ldr_modern is not None:
        out.f_ldr = abs(float(np.mean(ldr_old)) - float(np.mean(ldr_modern)))
    if sfd_hat is not None:
        out.f_widid = jsd(sfd_hat.p, sfd_hat.q)
    if old_prototypes and modern_prototypes:
        out.f_apdp = canberra_apdp(old_prototypes, modern_prototypes)
    return out


def scope_suite(
    word: str,
    sus: SusScores | None = None,
    theta: float | None = None,
    kappa_old: float | None = None,
    kappa_modern: float | None = None,
    ldr_old: np.ndarray | None = None,
    ldr_modern: np.ndarray | None = None,
    sfd_hat: SenseFrequencyDistribution | None = None,
) -> WordChangeScores:
    """Signed scope changes; degenerate ratios (zero variance or zero
    concentration) leave the field None so rank correlations can drop the
    word pairwise."""
    out = WordChangeScores(word=word, theta=theta)
    if sus is not None:
        alpha, beta = sus.alpha, sus.beta
        out.v_s = _population_variance(alpha)
        out.v_t = _population_variance(beta)
        if out.v_s > 0.0 and out.v_t > 0.0:
            out.g_sus = math.log(out.v_t / out.v_s)
        if theta is not None:
            out.g1 = float(alpha[alpha < -theta].sum() + beta[beta > theta].sum())
    if kappa_old is not None and kappa_modern is not None:
        if kappa_old > 0.0 and kappa_modern > 0.0:
            out.g_vmf = math.log(kappa_old / kappa_modern)
    if ldr_old is not None and ldr_modern is not None:
        out.u_s = _population_variance(ldr_old)
        out.u_t = _population_variance(ldr_modern)
        if out.u_s > 0.0 and out.u_t > 0.0:
            out.g_ldr = math.log(out.u_t / out.u_s)
    if sfd_hat is not None:
        out.g_widid = entropy(sfd_hat.q) - entropy(sfd_hat.p)
    return out
