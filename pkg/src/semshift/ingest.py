"""Parsing of DWUG-style usage tables and sense assignments.

Input files are tab-separated with a header row.  A uses table carries one
usage instance per row (identifier, lemma, grouping, context, target span);
a senses table maps identifiers to integer cluster labels.  Target spans are
byte offsets into the UTF-8 encoded context, cluster label -1 means
"unassigned" and is kept as an undefined sense.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

USES_COLUMNS = ("identifier", "lemma", "grouping", "context", "indexes_target_token")
SENSES_COLUMNS = ("identifier", "cluster")


class IngestError(Exception):
    """Malformed input data or inconsistent configuration."""


class RowError(IngestError):
    """A single data row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigError(IngestError):
    """The grouping map or another configuration input is inconsistent."""


class Period(Enum):
    OLD = "old"
    MODERN = "modern"


@dataclass(frozen=True)
class UsageInstance:
    """One occurrence of a target word in context.

    ``target_start``/``target_end`` are byte offsets into the UTF-8 encoding
    of ``context``; ``gold_sense`` is ``None`` while undefined.
    """

    id: str
    word: str
    period: Period
    context: str
    target_start: int
    target_end: int
    gold_sense: int | None = None

    def __post_init__(self):
        nbytes = len(self.context.encode("utf-8"))
        if not (0 <= self.target_start < self.target_end <= nbytes):
            raise ValueError(
                f"instance {self.id!r}: target span "
                f"{self.target_start}:{self.target_end} invalid for "
                f"{nbytes}-byte context"
            )
        if self.gold_sense is not None and self.gold_sense < 0:
            raise ValueError(f"instance {self.id!r}: negative sense label")


@dataclass(frozen=True)
class WordDataset:
    """All usage instances of one word, split by period and sorted by id."""

    word: str
    old_instances: tuple[UsageInstance, ...]
    modern_instances: tuple[UsageInstance, ...]

    @property
    def m(self) -> int:
        return len(self.old_instances)

    @property
    def n(self) -> int:
        return len(self.modern_instances)

    def all_instances(self) -> tuple[UsageInstance, ...]:
        return self.old_instances + self.modern_instances


@dataclass(frozen=True)
class SenseFrequencyDistribution:
    """Per-sense usage counts of one word in the two periods.

    ``x`` holds old-period counts, ``y`` modern-period counts, aligned with
    ``sense_ids``.  ``p`` and ``q`` are the normalized distributions.
    """

    sense_ids: tuple[int, ...]
    x: np.ndarray
    y: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return self.x / self.x.sum()

    @property
    def q(self) -> np.ndarray:
        return self.y / self.y.sum()

    def index_of(self, sense: int) -> int:
        return self.sense_ids.index(sense)


def _read_tsv(path: str | Path, required: Sequence[str]):
    """Yield (line_number, row_dict) for a headered TSV file."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        idx = {c: header.index(c) for c in header}
        for line, row in enumerate(reader, start=2):
            if not row or all(not field for field in row):
                continue
            if len(row) < len(header):
                raise RowError(line, f"expected {len(header)} fields, found {len(row)}")
            yield line, {c: row[i] for c, i in idx.items()}


def parse_uses(path: str | Path, grouping_map: Mapping[str, Period]) -> list[UsageInstance]:
    """Parse a uses table into instances; senses start out undefined.

    ``grouping_map`` maps each grouping value found in the file (e.g. a date
    range such as "1810-1860") to a period.
    """
    instances = []
    for line, row in _read_tsv(path, USES_COLUMNS):
        grouping = row["grouping"]
        if grouping not in grouping_map:
            raise ConfigError(
                f"unknown grouping {grouping!r} on line {line}; "
                f"configured groupings: {sorted(grouping_map)}"
            )
        spans = row["indexes_target_token"].split(":")
        if len(spans) != 2:
            raise RowError(line, f"malformed target indexes {row['indexes_target_token']!r}")
        try:
            start, end = int(spans[0]), int(spans[1])
        except ValueError:
            raise RowError(
                line, f"non-numeric target indexes {row['indexes_target_token']!r}"
            ) from None
        nbytes = len(row["context"].encode("utf-8"))
        if not (0 <= start < end <= nbytes):
            raise RowError(
                line, f"target span {start}:{end} exceeds context ({nbytes} bytes)"
            )
        instances.append(
            UsageInstance(
                id=row["identifier"],
                word=row["lemma"],
                period=grouping_map[grouping],
                context=row["context"],
                target_start=start,
                target_end=end,
            )
        )
    return instances


def parse_senses(
    path: str | Path, instances: Sequence[UsageInstance]
) -> tuple[list[UsageInstance], list[str]]:
    """Attach sense labels from a senses table.

    Returns the updated instances plus warnings for identifiers that appear
    in the senses file but not among the instances.  Label -1 (noise) keeps
    the sense undefined.  A duplicated identifier is an error.
    """
    labels: dict[str, int | None] = {}
    for line, row in _read_tsv(path, SENSES_COLUMNS):
        ident = row["identifier"]
        if ident in labels:
            raise RowError(line, f"duplicate identifier {ident!r}")
        try:
            cluster = int(row["cluster"])
        except ValueError:
            raise RowError(line, f"non-numeric cluster {row['cluster']!r}") from None
        if cluster < -1:
            raise RowError(line, f"cluster label {cluster} out of range")
        labels[ident] = None if cluster == -1 else cluster

    known = {inst.id for inst in instances}
    warnings = [
        f"sense file references unknown identifier {ident!r}"
        for ident in labels
        if ident not in known
    ]
    updated = [
        replace(inst, gold_sense=labels[inst.id]) if inst.id in labels else inst
        for inst in instances
    ]
    return updated, warnings


def assemble_word_dataset(instances: Iterable[UsageInstance], word: str) -> WordDataset:
    """Filter instances of one word and fix the row/column ordering.

    Instances are sorted by id within each period; every downstream matrix
    (embeddings, costs, transport plans) uses this ordering.
    """
    old = sorted(
        (i for i in instances if i.word == word and i.period is Period.OLD),
        key=lambda i: i.id,
    )
    modern = sorted(
        (i for i in instances if i.word == word and i.period is Period.MODERN),
        key=lambda i: i.id,
    )
    if not old:
        raise IngestError(f"word {word!r}: no instances in period {Period.OLD.value}")
    if not modern:
        raise IngestError(f"word {word!r}: no instances in period {Period.MODERN.value}")
    return WordDataset(word=word, old_instances=tuple(old), modern_instances=tuple(modern))


def build_gold_sfd(dataset: WordDataset) -> SenseFrequencyDistribution:
    """Tally per-sense counts over defined-sense instances of both periods.

    The sense inventory is the union of labels seen in either period;
    instances with an undefined sense do not contribute to the counts.
    """
    old_senses = [i.gold_sense for i in dataset.old_instances if i.gold_sense is not None]
    modern_senses = [
        i.gold_sense for i in dataset.modern_instances if i.gold_sense is not None
    ]
    if not old_senses or not modern_senses:
        empty = Period.OLD.value if not old_senses else Period.MODERN.value
        raise IngestError(f"word {dataset.word!r}: empty gold SFD ({empty} period)")
    inventory = tuple(sorted(set(old_senses) | set(modern_senses)))
    pos = {s: k for k, s in enumerate(inventory)}
    x = np.zeros(len(inventory), dtype=np.int64)
    y = np.zeros(len(inventory), dtype=np.int64)
    for s in old_senses:
        x[pos[s]] += 1
    for s in modern_senses:
        y[pos[s]] += 1
    return SenseFrequencyDistribution(sense_ids=inventory, x=x, y=y)


def dump_instances_jsonl(instances: Iterable[UsageInstance], path: str | Path) -> None:
    """Write the canonical one-object-per-line instance dump."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(
                json.dumps(
                    {
                        "id": inst.id,
                        "word": inst.word,
                        "period": inst.period.value,
                        "context": inst.context,
                        "target_start": inst.target_start,
                        "target_end": inst.target_end,
                        "gold_sense": inst.gold_sense,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")


def load_instances_jsonl(path: str | Path) -> list[UsageInstance]:
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                instances.append(
                    UsageInstance(
                        id=obj["id"],
                        word=obj["word"],
                        period=Period(obj["period"]),
                        context=obj["context"],
                        target_start=obj["target_start"],
                        target_end=obj["target_end"],
                        gold_sense=obj["gold_sense"],
                    )
                )
            except (KeyError, ValueError) as exc:
                raise RowError(line, str(exc)) from None
    return instances
