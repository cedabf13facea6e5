"""Rank-correlation evaluation with repeated validation/test splits.

A task compares method scores against gold scores by Spearman correlation:
instance level pools per-instance scores across test words; sense level
averages scores within (word, sense) groups first; word level correlates one
value per word.  Hyperparameters (penalty weight, threshold ratio, damping)
are tuned per split by maximizing validation correlation, then scored on the
held-out test words, repeated over many random splits.

Because disappearance/emergence imputation and the shift threshold depend on
which words are in play, candidates and gold scores are score *providers*:
callables from a word set to per-word scores.  Tuning calls them with the
validation words, final scoring with the full split (validation plus test).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .ingest import SenseFrequencyDistribution


class Task(Enum):
    INSTANCE = "instance"
    SENSE = "sense"
    WORD_MAGNITUDE = "word-magnitude"
    WORD_SCOPE = "word-scope"


class ConstantInputError(ValueError):
    """Correlation undefined: one side has no rank variation."""


InstanceProvider = Callable[[Sequence[str]], Mapping[str, np.ndarray]]
WordProvider = Callable[[Sequence[str]], Mapping[str, "float | None"]]


@dataclass(frozen=True)
class Candidate:
    """One grid point: a sortable key, a report label, and its scores."""

    key: tuple[float, ...]
    label: str
    provider: InstanceProvider | WordProvider


def constant_provider(scores: Mapping) -> Callable[[Sequence[str]], Mapping]:
    """Wrap word-set-independent scores as a provider."""

    def provide(_words: Sequence[str]) -> Mapping:
        return scores

    return provide


@dataclass(frozen=True)
class EvalConfig:
    lambda_grid: tuple[float, ...] = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
    r_grid: tuple[float, ...] = (0.4, 0.6, 0.8)
    damping_grid: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8, 0.9)
    split_ratio: float = 0.8
    repetitions: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if not self.lambda_grid or not self.damping_grid:
            raise ValueError("hyperparameter grids must be nonempty")
        if not (0.0 < self.split_ratio < 1.0):
            raise ValueError(f"split ratio must lie in (0, 1), got {self.split_ratio}")
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")


@dataclass
class EvalReport:
    task: Task
    method: str
    mean_spearman: float
    per_split: list[float]
    selected: dict[str, int]
    dropped_splits: int
    repetitions: int

    def to_json(self, path: str | Path) -> None:
        payload = {
            "task": self.task.value,
            "method": self.method,
            "mean_spearman": self.mean_spearman,
            "per_split": self.per_split,
            "selected_hyperparameters": self.selected,
            "dropped_splits": self.dropped_splits,
            "repetitions": self.repetitions,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def summary_row(self) -> dict[str, object]:
        return {
            "task": self.task.value,
            "method": self.method,
            "mean_spearman": self.mean_spearman,
            "splits_used": len(self.per_split),
            "dropped_splits": self.dropped_splits,
            "top_choice": max(self.selected, key=lambda k: self.selected[k]) if self.selected else "",
        }


def write_summary_csv(reports: Sequence[EvalReport], path: str | Path) -> None:
    rows = [r.summary_row() for r in reports]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Spearman correlation
# ---------------------------------------------------------------------------


def rank_with_ties(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank range."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average-tie ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least two observations")
    rx = rank_with_ties(x)
    ry = rank_with_ties(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ConstantInputError("rank correlation undefined for constant input")
    return float(dx @ dy) / math.sqrt(sx * sy)


# ---------------------------------------------------------------------------
# splits and task scoring
# ---------------------------------------------------------------------------


def split_words(
    words: Sequence[str], ratio: float, seed: "int | np.random.Generator"
) -> tuple[list[str], list[str]]:
    """Shuffle-then-cut split into (validation, test); deterministic per seed."""
    if len(words) < 5:
        raise ValueError(f"need at least 5 words to split, got {len(words)}")
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(len(words))
    cut = int(math.floor(ratio * len(words) + 0.5))
    cut = min(max(cut, 1), len(words) - 1)
    validation = [words[i] for i in order[:cut]]
    test = [words[i] for i in order[cut:]]
    return validation, test


def _pool(words, scores_by_word):
    parts = []
    for word in words:
        if word not in scores_by_word:
            raise KeyError(f"no scores for word {word!r}")
        parts.append(np.asarray(scores_by_word[word], dtype=np.float64))
    return parts


def eval_instance_level(
    words: Sequence[str],
    method_scores: Mapping[str, np.ndarray],
    gold_scores: Mapping[str, np.ndarray],
) -> float:
    """Spearman over all instances of the given words pooled together."""
    method = np.concatenate(_pool(words, method_scores)) if words else np.empty(0)
    gold = np.concatenate(_pool(words, gold_scores)) if words else np.empty(0)
    if method.size != gold.size:
        raise ValueError("method and gold scores disagree on instance counts")
    if method.size < 2:
        raise ValueError("need at least two pooled instances")
    return spearman(method, gold)


def eval_sense_level(
    words: Sequence[str],
    method_scores: Mapping[str, np.ndarray],
    gold_scores: Mapping[str, np.ndarray],
    senses: Mapping[str, Sequence[int]],
) -> float:
    """Spearman over (word, sense) groups of mean method score vs gold."""
    group_method: list[float] = []
    group_gold: list[float] = []
    for word in words:
        m = np.asarray(method_scores[word], dtype=np.float64)
        g = np.asarray(gold_scores[word], dtype=np.float64)
        labels = np.asarray(senses[word])
        if not (m.size == g.size == labels.size):
            raise ValueError(f"misaligned scores for word {word!r}")
        for sense in np.unique(labels):
            mask = labels == sense
            group_method.append(float(m[mask].mean()))
            group_gold.append(float(g[mask].mean()))
    if len(group_method) < 2:
        raise ValueError("need at least two (word, sense) groups")
    return spearman(group_method, group_gold)


def eval_word_level(
    words: Sequence[str],
    method_scores: Mapping[str, "float | None"],
    gold_scores: Mapping[str, "float | None"],
) -> float:
    """Spearman over words, dropping words undefined on either side."""
    pairs = [
        (method_scores[w], gold_scores[w])
        for w in words
        if method_scores.get(w) is not None and gold_scores.get(w) is not None
    ]
    if len(pairs) < 2:
        raise ValueError(f"only {len(pairs)} words have defined scores")
    xs, ys = zip(*pairs)
    return spearman(xs, ys)


def _score_task(task, words, method_scores, gold_scores, senses):
    if task is Task.INSTANCE:
        return eval_instance_level(words, method_scores, gold_scores)
    if task is Task.SENSE:
        if senses is None:
            raise ValueError("sense-level task needs per-instance sense labels")
        return eval_sense_level(words, method_scores, gold_scores, senses)
    return eval_word_level(words, method_scores, gold_scores)


def tune_hyperparams(
    validation_words: Sequence[str],
    task: Task,
    candidates: Sequence[Candidate],
    gold_provider: Callable,
    senses: Mapping[str, Sequence[int]] | None = None,
) -> Candidate:
    """Grid point with the best validation correlation.

    Candidates are tried in ascending key order and replaced only on strict
    improvement, so ties go to the smallest key.  Grid points whose scores
    are undefined on the validation set are skipped; if every point is
    undefined, raises.
    """
    if not candidates:
        raise ValueError("empty candidate grid")
    gold = gold_provider(validation_words)
    best: Candidate | None = None
    best_value = -math.inf
    for candidate in sorted(candidates, key=lambda c: c.key):
        try:
            value = _score_task(
                task, validation_words, candidate.provider(validation_words), gold, senses
            )
        except (ConstantInputError, ValueError):
            continue
        if value > best_value:
            best = candidate
            best_value = value
    if best is None:
        raise ValueError("no candidate produced a defined validation score")
    return best


def run_repeated(
    words: Sequence[str],
    task: Task,
    config: EvalConfig,
    candidates: Sequence[Candidate],
    gold_provider: Callable,
    senses: Mapping[str, Sequence[int]] | None = None,
    method: str = "",
) -> EvalReport:
    """Repeated split -> tune -> test protocol.

    Each repetition derives its own generator from (seed, repetition), so
    serial and parallel execution agree.  Splits where tuning or scoring is
    undefined are dropped and counted.
    """
    words = list(words)
    per_split: list[float] = []
    selected: dict[str, int] = {}
    dropped = 0
    for rep in range(config.repetitions):
        rng = np.random.default_rng([config.rng_seed, rep])
        validation, test = split_words(words, config.split_ratio, rng)
        try:
            best = tune_hyperparams(validation, task, candidates, gold_provider, senses)
            context = validation + test
            value = _score_task(
                task, test, best.provider(context), gold_provider(context), senses
            )
        except (ConstantInputError, ValueError, KeyError):
            dropped += 1
            continue
        per_split.append(value)
        selected[best.label] = selected.get(best.label, 0) + 1
    if not per_split:
        raise ValueError("every split was dropped; nothing to report")
    return EvalReport(
        task=task,
        method=method,
        mean_spearman=float(np.mean(per_split)),
        per_split=per_split,
        selected=selected,
        dropped_splits=dropped,
        repetitions=config.repetitions,
    )


def compute_gold_imputation_bounds(
    sfds: Mapping[str, SenseFrequencyDistribution],
) -> tuple[float, float]:
    """Extreme finite log count-ratios across every word and sense."""
    finite: list[float] = []
    for sfd in sfds.values():
        both = (sfd.x > 0) & (sfd.y > 0)
        finite.extend(np.log(sfd.y[both] / sfd.x[both]).tolist())
    if not finite:
        raise ValueError("no sense has usage in both periods; bounds undefined")
    return min(finite), max(finite)
