"""Metrics, significance testing, and report emission.

Gold sets merge every sense of a key, so a word may carry several relation
labels at once; per-relation cells are therefore independent proportions.
Reports are pure functions of their inputs and serialize to deterministic
bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import ParseError, ValidationError
from .lexicon import WORDNET_RELATIONS, RelationType

GoldSet = dict[str, dict[RelationType, frozenset[str]]]

SIGNIFICANCE_LEVEL = 0.01
DAGGER = "†"


def load_gold(path: str | Path) -> GoldSet:
    """Read line-delimited {key, relation, word} gold records.

    Only the four WordNet relation types are legal here; senses are already
    merged by construction of the file.
    """
    staging: dict[str, dict[RelationType, set[str]]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                key = str(obj["key"]).lower()
                relation = RelationType(obj["relation"])
                word = str(obj["word"]).lower()
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(path, line_no, f"not a valid record: {exc}") from exc
            if relation not in WORDNET_RELATIONS:
                raise ParseError(
                    path, line_no, f"gold entries must use WordNet relations, got "
                    f"{relation.value!r}"
                )
            staging.setdefault(key, {r: set() for r in WORDNET_RELATIONS})[
                relation
            ].add(word)
    return {
        key: {relation: frozenset(words) for relation, words in by_rel.items()}
        for key, by_rel in staging.items()
    }


def gold_words(gold: GoldSet, key: str) -> frozenset[str]:
    """Union of a key's gold words over all four relations."""
    by_rel = gold.get(key)
    if by_rel is None:
        return frozenset()
    merged: set[str] = set()
    for words in by_rel.values():
        merged |= words
    return frozenset(merged)


def load_frequencies(path: str | Path) -> dict[str, int]:
    """Read line-delimited {key, count} records."""
    freqs: dict[str, int] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                key = str(obj["key"]).lower()
                count = int(obj["count"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(path, line_no, f"not a valid record: {exc}") from exc
            freqs[key] = count
    return freqs


def p_at_k(reranked: Sequence[str], gold: frozenset[str] | set[str], k: int) -> float:
    """|top-k members of gold| / k; short lists keep k as the denominator."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    top = reranked[:k]
    return sum(1 for word in top if word in gold) / k


def p_at_1_by_relation_type(
    results: Sequence[tuple[str, Sequence[str]]],
    gold: GoldSet,
) -> tuple[dict[RelationType, float], int]:
    """Per-relation fraction of keys whose top-ranked word is gold for it.

    `results` pairs each key with its ranked word list. A top word carrying
    several relation labels counts once per label, so the cells are
    independent proportions. Keys absent from the gold set are skipped; the
    skip count is returned alongside the proportions.
    """
    counts = {relation: 0 for relation in WORDNET_RELATIONS}
    evaluated = 0
    skipped = 0
    for key, ranked in results:
        by_rel = gold.get(key)
        if by_rel is None:
            skipped += 1
            continue
        evaluated += 1
        if not ranked:
            continue
        top = ranked[0]
        for relation in WORDNET_RELATIONS:
            if top in by_rel[relation]:
                counts[relation] += 1
    if evaluated == 0:
        return {relation: 0.0 for relation in WORDNET_RELATIONS}, skipped
    return (
        {relation: counts[relation] / evaluated for relation in WORDNET_RELATIONS},
        skipped,
    )


def frequency_split(
    keys: Sequence[str], frequencies: Mapping[str, int]
) -> tuple[set[str], set[str]]:
    """Split keys into equally sized high- and low-frequency halves.

    Sorting is by descending frequency with ties in word order; an odd key
    count leaves the extra key in the high half.
    """
    for key in keys:
        if key not in frequencies:
            raise ValidationError(f"no frequency recorded for key {key!r}")
    ordered = sorted(keys, key=lambda k: (-frequencies[k], k))
    cut = math.ceil(len(ordered) / 2)
    return set(ordered[:cut]), set(ordered[cut:])


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j) / 2 + 1
        for position in range(i, j + 1):
            ranks[order[position]] = average
        i = j + 1
    return ranks


EXACT_WILCOXON_LIMIT = 25


def wilcoxon_paired(x: Sequence[float], y: Sequence[float]) -> float:
    """Two-sided paired Wilcoxon signed-rank p-value.

    Zero differences are dropped and tied magnitudes get average ranks. Up
    to 25 non-zero pairs the p-value comes from the exact sign-assignment
    distribution; above that, from the normal approximation with tie and
    continuity corrections. All-zero differences give p = 1 by convention.
    """
    if len(x) != len(y):
        raise ValidationError("paired samples must have equal length")
    if len(x) == 0:
        raise ValidationError("paired samples must be non-empty")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        return 1.0
    n = len(nonzero)
    magnitudes = [abs(d) for d in nonzero]
    ranks = _average_ranks(magnitudes)
    if n <= EXACT_WILCOXON_LIMIT:
        # Doubling the average ranks makes every rank an integer, so the
        # distribution of the positive-rank sum is a small integer DP.
        doubled = [int(round(2 * r)) for r in ranks]
        w_doubled = sum(
            dr for dr, d in zip(doubled, nonzero) if d > 0
        )
        total = sum(doubled)
        counts = [0] * (total + 1)
        counts[0] = 1
        for dr in doubled:
            for s in range(total, dr - 1, -1):
                counts[s] += counts[s - dr]
        at_most = sum(counts[: w_doubled + 1])
        at_least = sum(counts[w_doubled:])
        p = 2 * min(at_most, at_least) / (2**n)
        return min(1.0, p)
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    mean = n * (n + 1) / 4
    tie_term = 0.0
    seen: dict[float, int] = {}
    for magnitude in magnitudes:
        seen[magnitude] = seen.get(magnitude, 0) + 1
    for count in seen.values():
        tie_term += count**3 - count
    variance = n * (n + 1) * (2 * n + 1) / 24 - tie_term / 48
    if variance <= 0:
        return 1.0
    delta = w_plus - mean
    if delta > 0:
        delta -= 0.5
    elif delta < 0:
        delta += 0.5
    z = delta / math.sqrt(variance)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2)))


@dataclass
class ReportCell:
    """One table cell: a proportion, its denominator, and a dagger slot.

    `dagger` is None when the cell carries no significance comparison, True
    when the difference to the reference is non-significant (p above the
    threshold), False when it is significant.
    """

    value: Optional[float]
    denom: Optional[int] = None
    dagger: Optional[bool] = None

    def validate(self) -> None:
        if self.value is not None and not 0.0 <= self.value <= 1.0:
            raise ValidationError(f"reported proportion {self.value} outside [0, 1]")


@dataclass
class ReportTable:
    """One table; `percent` marks proportion cells rendered as x100."""

    title: str
    columns: list[str]
    rows: list[tuple[str, list[ReportCell]]]
    percent: bool = True


@dataclass
class EvalReport:
    """Everything one run reports: configuration echo, tables, counters."""

    config: dict = field(default_factory=dict)
    tables: list[ReportTable] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        for table in self.tables:
            for _, cells in table.rows:
                if len(cells) != len(table.columns):
                    raise ValidationError(
                        f"table {table.title!r} row width mismatch"
                    )
                if table.percent:
                    for cell in cells:
                        cell.validate()


def _format_value(value: Optional[float], percent: bool) -> str:
    if value is None:
        return ""
    if percent:
        return f"{value * 100:.1f}"
    return f"{value:.6g}"


def _table_to_tsv(table: ReportTable) -> str:
    # A significance column follows every column that carries dagger info.
    sig_columns = [
        any(cells[i].dagger is not None for _, cells in table.rows)
        for i in range(len(table.columns))
    ]
    header: list[str] = [""]
    for name, has_sig in zip(table.columns, sig_columns):
        header.append(name)
        if has_sig:
            header.append(f"{name}_sig")
    lines = [f"# {table.title}", "\t".join(header)]
    for label, cells in table.rows:
        row = [label]
        for cell, has_sig in zip(cells, sig_columns):
            row.append(_format_value(cell.value, table.percent))
            if has_sig:
                row.append(DAGGER if cell.dagger else "")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def render_report(report: EvalReport, fmt: str) -> str:
    """Serialize a report to tsv or json; identical inputs give identical bytes."""
    report.validate()
    if fmt == "tsv":
        parts = []
        if report.config:
            parts.append(
                "\n".join(
                    f"# config {key} = {report.config[key]}"
                    for key in sorted(report.config)
                )
                + "\n"
            )
        parts.extend(_table_to_tsv(table) for table in report.tables)
        if report.counters:
            lines = ["# counters"]
            lines.extend(
                f"{name}\t{report.counters[name]}" for name in sorted(report.counters)
            )
            parts.append("\n".join(lines) + "\n")
        return "\n".join(parts)
    if fmt == "json":
        payload = {
            "config": report.config,
            "tables": [
                {
                    "title": table.title,
                    "columns": table.columns,
                    "percent": table.percent,
                    "rows": [
                        {
                            "label": label,
                            "cells": [
                                {
                                    "value": cell.value,
                                    "denom": cell.denom,
                                    "dagger": cell.dagger,
                                }
                                for cell in cells
                            ],
                        }
                        for label, cells in table.rows
                    ],
                }
                for table in report.tables
            ],
            "counters": report.counters,
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    raise ValidationError(f"unknown report format {fmt!r}")


def emit_report(report: EvalReport, fmt: str, path: str | Path) -> None:
    """Write a rendered report to disk."""
    Path(path).write_text(render_report(report, fmt), encoding="utf-8")
