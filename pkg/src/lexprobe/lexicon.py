"""Relation lexicons and capped target sets.

A lexicon maps each key (a lowercased noun) to sense-scoped lists of
related target words, each labeled with a relation type. Target sets are
assembled per (key, sense) under three caps: per relation, over the WordNet
relations together, and overall. Keys lacking any of the five relation
types are rejected rather than assembled.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import ParseError, ValidationError


class RelationType(enum.Enum):
    SYN = "syn"
    HYPE = "hype"
    HYPO = "hypo"
    COHYP = "cohyp"
    DIST_NGH = "dist"


# WordNet-sourced relations, in assembly order; DIST_NGH comes after them.
WORDNET_RELATIONS = (
    RelationType.SYN,
    RelationType.HYPE,
    RelationType.HYPO,
    RelationType.COHYP,
)
ALL_RELATIONS = WORDNET_RELATIONS + (RelationType.DIST_NGH,)


def _is_multiword(word: str) -> bool:
    return " " in word or "_" in word or "\t" in word


@dataclass(frozen=True)
class LexiconEntry:
    key: str
    sense: Optional[str]
    relation: RelationType
    target: str


@dataclass
class RelationLexicon:
    """Mapping key -> sense -> entries, in file order within each group."""

    entries: dict[str, dict[Optional[str], list[LexiconEntry]]] = field(
        default_factory=dict
    )
    folded_words: int = 0  # inputs that arrived with uppercase letters
    skipped_multiword: int = 0

    def keys(self) -> list[str]:
        return sorted(self.entries)

    def senses(self, key: str) -> list[Optional[str]]:
        by_sense = self.entries.get(key, {})
        return sorted((s for s in by_sense if s is not None)) + (
            [None] if None in by_sense else []
        )

    def entries_for(self, key: str, sense: Optional[str]) -> list[LexiconEntry]:
        return self.entries.get(key, {}).get(sense, [])

    def size(self) -> int:
        return sum(
            len(group) for by_sense in self.entries.values() for group in by_sense.values()
        )

    def _add(self, entry: LexiconEntry) -> None:
        self.entries.setdefault(entry.key, {}).setdefault(entry.sense, []).append(entry)


def load_lexicon(path: str | Path) -> RelationLexicon:
    """Read a line-delimited lexicon file.

    Each line is an object with fields key, sense (string or null),
    relation and target. Words are folded to lowercase; multiword targets
    (embedded space or underscore) are skipped and counted, because the
    substitution machinery works on single token positions.
    """
    lexicon = RelationLexicon()
    seen: set[tuple[str, Optional[str], RelationType, str]] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"not a valid record: {exc}") from exc
            try:
                raw_key = obj["key"]
                raw_sense = obj.get("sense")
                raw_relation = obj["relation"]
                raw_target = obj["target"]
            except (KeyError, TypeError) as exc:
                raise ParseError(path, line_no, f"missing field: {exc}") from exc
            if not isinstance(raw_key, str) or not isinstance(raw_target, str):
                raise ParseError(path, line_no, "key and target must be strings")
            try:
                relation = RelationType(raw_relation)
            except ValueError:
                raise ParseError(
                    path, line_no, f"unknown relation {raw_relation!r}"
                ) from None
            if raw_sense is not None and not isinstance(raw_sense, str):
                raise ParseError(path, line_no, "sense must be a string or null")
            if relation is RelationType.DIST_NGH and raw_sense is not None:
                raise ParseError(
                    path, line_no, "distributional-neighbor entries carry no sense"
                )
            if raw_key != raw_key.lower() or raw_target != raw_target.lower():
                lexicon.folded_words += 1
            key = raw_key.lower()
            target = raw_target.lower()
            if target == key:
                raise ParseError(path, line_no, f"target equals key {key!r}")
            if _is_multiword(target):
                lexicon.skipped_multiword += 1
                continue
            entry = LexiconEntry(key=key, sense=raw_sense, relation=relation, target=target)
            dup_key = (key, raw_sense, relation, target)
            if dup_key in seen:
                raise ValidationError(
                    f"{path}:{line_no}: duplicate entry {dup_key!r}"
                )
            seen.add(dup_key)
            lexicon._add(entry)
    return lexicon


@dataclass(frozen=True)
class CapConfig:
    per_relation: int = 10
    wordnet_total: int = 30
    grand_total: int = 40


@dataclass(frozen=True)
class TargetSet:
    key: str
    sense: Optional[str]
    targets: tuple[tuple[str, RelationType], ...]
    underfilled_dist: bool = False

    def relation_counts(self) -> dict[RelationType, int]:
        counts = {relation: 0 for relation in ALL_RELATIONS}
        for _, relation in self.targets:
            counts[relation] += 1
        return counts

    def words(self) -> tuple[str, ...]:
        return tuple(word for word, _ in self.targets)

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class TargetSetRejection:
    key: str
    sense: Optional[str]
    missing: tuple[RelationType, ...]


def assemble_target_set(
    key: str,
    sense: Optional[str],
    lexicon: RelationLexicon,
    caps: CapConfig = CapConfig(),
) -> TargetSet | TargetSetRejection:
    """Build the capped target set for one (key, sense), or reject it.

    Selection walks relations in the fixed order syn, hype, hypo, cohyp,
    dist, taking targets in file order up to the per-relation cap and
    skipping words already chosen. If the four WordNet relations together
    exceed their cap, hyponyms are dropped from the tail first, then
    cohyponyms. A key missing any relation type after selection is
    rejected, with the missing types listed.
    """
    key = key.lower()
    wordnet_entries = lexicon.entries_for(key, sense)
    dist_entries = [
        e for e in lexicon.entries_for(key, None) if e.relation is RelationType.DIST_NGH
    ]

    chosen: dict[RelationType, list[str]] = {relation: [] for relation in ALL_RELATIONS}
    used: set[str] = set()
    for relation in ALL_RELATIONS:
        if relation is RelationType.DIST_NGH:
            pool: Iterable[LexiconEntry] = dist_entries
        else:
            pool = (e for e in wordnet_entries if e.relation is relation)
        for entry in pool:
            if len(chosen[relation]) >= caps.per_relation:
                break
            if entry.target in used:
                continue
            chosen[relation].append(entry.target)
            used.add(entry.target)

    wordnet_count = sum(len(chosen[r]) for r in WORDNET_RELATIONS)
    for relation in (RelationType.HYPO, RelationType.COHYP):
        while wordnet_count > caps.wordnet_total and chosen[relation]:
            chosen[relation].pop()
            wordnet_count -= 1
    if wordnet_count > caps.wordnet_total:
        raise ValidationError(
            f"cap config {caps} cannot bring the WordNet total under "
            f"{caps.wordnet_total} for key {key!r}"
        )

    underfilled = len(chosen[RelationType.DIST_NGH]) < caps.per_relation

    ordered: list[tuple[str, RelationType]] = []
    for relation in ALL_RELATIONS:
        ordered.extend((word, relation) for word in chosen[relation])
    ordered = ordered[: caps.grand_total]

    counts = {relation: 0 for relation in ALL_RELATIONS}
    for _, relation in ordered:
        counts[relation] += 1
    missing = tuple(relation for relation in ALL_RELATIONS if counts[relation] == 0)
    if missing:
        return TargetSetRejection(key=key, sense=sense, missing=missing)
    return TargetSet(
        key=key,
        sense=sense,
        targets=tuple(ordered),
        underfilled_dist=underfilled,
    )


@dataclass(frozen=True)
class NeighborList:
    """A key's distributional neighbors, ordered by non-increasing score."""

    key: str
    neighbors: tuple[tuple[str, float], ...]

    def words(self) -> tuple[str, ...]:
        return tuple(word for word, _ in self.neighbors)


def load_neighbors(path: str | Path) -> dict[str, NeighborList]:
    """Read a line-delimited neighbor file: {key, neighbors: [{word, score}]}.

    Lists are canonicalized: sorted by descending score with ties in
    lexicographic word order, duplicates keeping their best score, and the
    key itself removed.
    """
    lists: dict[str, NeighborList] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                key = str(obj["key"]).lower()
                raw = [(str(n["word"]).lower(), float(n["score"])) for n in obj["neighbors"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(path, line_no, f"not a valid record: {exc}") from exc
            for _, score in raw:
                if not -1.0 <= score <= 1.0:
                    raise ParseError(path, line_no, f"score {score} outside [-1, 1]")
            if key in lists:
                raise ValidationError(f"{path}:{line_no}: duplicate key {key!r}")
            ordered = sorted(raw, key=lambda pair: (-pair[1], pair[0]))
            deduped: list[tuple[str, float]] = []
            taken: set[str] = set()
            for word, score in ordered:
                if word == key or word in taken:
                    continue
                taken.add(word)
                deduped.append((word, score))
            lists[key] = NeighborList(key=key, neighbors=tuple(deduped))
    return lists


def dist_neighbors(
    key: str,
    neighbors: NeighborList,
    wordnet_targets: set[str] | frozenset[str],
    limit: int = 10,
) -> tuple[list[str], bool]:
    """First `limit` neighbors that are neither the key nor WordNet targets.

    Returns the selected words and an under-filled flag raised when fewer
    than `limit` eligible neighbors exist.
    """
    if limit < 1:
        raise ValidationError("limit must be >= 1")
    key = key.lower()
    selected: list[str] = []
    for word, _ in neighbors.neighbors:
        if word == key or word in wordnet_targets:
            continue
        selected.append(word)
        if len(selected) == limit:
            break
    return selected, len(selected) < limit


def merged_wordnet_targets(
    lexicon: RelationLexicon, key: str
) -> Mapping[RelationType, frozenset[str]]:
    """All WordNet targets of a key with senses merged, grouped by relation."""
    merged: dict[RelationType, set[str]] = {r: set() for r in WORDNET_RELATIONS}
    for sense_entries in lexicon.entries.get(key.lower(), {}).values():
        for entry in sense_entries:
            if entry.relation in merged:
                merged[entry.relation].add(entry.target)
    return {relation: frozenset(words) for relation, words in merged.items()}
