"""Test sentences: sense-tagged ingestion and raw-corpus sampling/selection.

Experiment 1 consumes sense-tagged sentences with a per-sense cap.
Experiment 2 samples a pool of occurrences per key from a raw corpus and
narrows it to a fixed number of sentences under one of four strategies,
all deterministic given the run seed.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import rng
from .embedding import Backend, cosine, encode, word_repr, WordVector
from .errors import ParseError, ValidationError

SENSE_SENTENCE_CAP = 20
DEFAULT_MIN_LEN = 10
DEFAULT_MAX_LEN = 90


@dataclass(frozen=True)
class TestSentence:
    """A tokenized sentence with one marked occurrence of its key."""

    __test__ = False  # keep pytest from collecting this domain class

    id: str
    tokens: tuple[str, ...]
    key_index: int
    key: str
    sense: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.key_index < len(self.tokens):
            raise ValidationError(
                f"sentence {self.id!r}: key_index {self.key_index} out of range "
                f"for {len(self.tokens)} tokens"
            )
        if self.tokens[self.key_index].lower() != self.key.lower():
            raise ValidationError(
                f"sentence {self.id!r}: token {self.tokens[self.key_index]!r} at "
                f"key_index does not match key {self.key!r}"
            )


class SelectionStrategy(enum.Enum):
    RANDOM = "random"
    CLOSEST_AVG = "closest_avg"
    FARTHEST_AVG = "farthest_avg"
    UNIFORM = "uniform"


def load_sense_tagged(
    path: str | Path, per_sense_cap: int = SENSE_SENTENCE_CAP
) -> list[TestSentence]:
    """Read sense-tagged sentences, keeping at most `per_sense_cap` per
    (key, sense) in file order."""
    kept: list[TestSentence] = []
    counts: dict[tuple[str, Optional[str]], int] = {}
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
                sentence = TestSentence(
                    id=str(obj["id"]),
                    tokens=tuple(str(t) for t in obj["tokens"]),
                    key_index=int(obj["key_index"]),
                    key=str(obj["key"]).lower(),
                    sense=None if obj.get("sense") is None else str(obj["sense"]),
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(path, line_no, f"missing field: {exc}") from exc
            except ValidationError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            group = (sentence.key, sentence.sense)
            if counts.get(group, 0) >= per_sense_cap:
                continue
            counts[group] = counts.get(group, 0) + 1
            kept.append(sentence)
    return kept


def sample_raw_sentences(
    corpus_path: str | Path,
    key: str,
    n_sent: int,
    min_len: int = DEFAULT_MIN_LEN,
    max_len: int = DEFAULT_MAX_LEN,
    seed: int = 0,
) -> list[TestSentence]:
    """Sample up to `n_sent` occurrences of `key` from a raw corpus.

    The corpus holds one pre-tokenized sentence per line. Eligible lines
    contain the key (case-insensitively) and have a token count within
    [min_len, max_len]; the marked occurrence is the first one. Sampling is
    uniform without replacement from a per-key stream, and the sample is
    returned in file order. An empty result means the key has no context in
    this corpus and is excluded downstream.
    """
    if n_sent < 1:
        raise ValidationError("n_sent must be >= 1")
    if min_len > max_len:
        raise ValidationError(f"min_len {min_len} exceeds max_len {max_len}")
    key = key.lower()
    eligible: list[tuple[int, tuple[str, ...], int]] = []
    with Path(corpus_path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = tuple(line.split())
            if not min_len <= len(tokens) <= max_len:
                continue
            key_index = next(
                (i for i, tok in enumerate(tokens) if tok.lower() == key), None
            )
            if key_index is None:
                continue
            eligible.append((line_no, tokens, key_index))
    if not eligible:
        return []
    gen = rng.stream(seed, f"sample:{key}")
    picked = sorted(gen.sample(range(len(eligible)), n_sent))
    return [
        TestSentence(
            id=f"{key}:{eligible[i][0]}",
            tokens=eligible[i][1],
            key_index=eligible[i][2],
            key=key,
        )
        for i in picked
    ]


def uniform_indices(m: int, n_c: int) -> list[int]:
    """Positions round(i*(m-1)/(n_c-1)) into a sorted list of m candidates.

    Rounding is half-up; a duplicate advances to the next unused position
    upward. n_c = 1 degenerates to the (lower) median position.
    """
    if n_c >= m:
        return list(range(m))
    if n_c == 1:
        return [(m - 1) // 2]
    used: set[int] = set()
    out: list[int] = []
    for i in range(n_c):
        idx = math.floor(i * (m - 1) / (n_c - 1) + 0.5)
        while idx in used:
            idx += 1
        if idx >= m:
            raise ValidationError("uniform selection ran out of positions")
        used.add(idx)
        out.append(idx)
    return out


def pick_by_strategy(
    scored: Sequence[tuple[TestSentence, float]],
    n_c: int,
    strategy: SelectionStrategy,
    gen: rng.Xorshift64Star | None = None,
) -> list[TestSentence]:
    """Select n_c sentences from (sentence, similarity-to-centroid) pairs.

    Pure given its inputs; ties on the similarity value break by sentence
    id. RANDOM ignores the scores and consumes `gen`.
    """
    if n_c >= len(scored):
        return sorted((s for s, _ in scored), key=lambda s: s.id)
    if strategy is SelectionStrategy.RANDOM:
        if gen is None:
            raise ValidationError("random selection needs a generator")
        ordered = sorted((s for s, _ in scored), key=lambda s: s.id)
        return sorted(gen.sample(ordered, n_c), key=lambda s: s.id)
    ascending = sorted(scored, key=lambda pair: (pair[1], pair[0].id))
    if strategy is SelectionStrategy.CLOSEST_AVG:
        descending = sorted(scored, key=lambda pair: (-pair[1], pair[0].id))
        chosen = [s for s, _ in descending[:n_c]]
    elif strategy is SelectionStrategy.FARTHEST_AVG:
        chosen = [s for s, _ in ascending[:n_c]]
    elif strategy is SelectionStrategy.UNIFORM:
        chosen = [ascending[i][0] for i in uniform_indices(len(ascending), n_c)]
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    return sorted(chosen, key=lambda s: s.id)


def candidate_similarities(
    candidates: Sequence[TestSentence],
    backend: Backend,
    layer: int,
) -> list[tuple[TestSentence, float]]:
    """Similarity of each candidate's key vector to the candidates' centroid."""
    vectors: list[WordVector] = []
    ordered = sorted(candidates, key=lambda s: s.id)
    for sentence in ordered:
        encoding = encode(backend, sentence.tokens, sentence.id)
        vectors.append(word_repr(encoding, sentence.key_index, layer))
    centroid = np.zeros(vectors[0].dim, dtype=np.float64)
    for vec in vectors:
        centroid += vec.values.astype(np.float64)
    centroid /= len(vectors)
    centroid_vec = WordVector(values=centroid.astype(np.float32), layer=layer)
    return [
        (sentence, cosine(vec, centroid_vec))
        for sentence, vec in zip(ordered, vectors)
    ]


def select_test_sentences(
    candidates: Sequence[TestSentence],
    key: str,
    n_c: int,
    strategy: SelectionStrategy,
    backend: Backend,
    layer: int,
    seed: int = 0,
) -> list[TestSentence]:
    """Narrow a candidate pool to n_c sentences under the given strategy.

    The similarity-based strategies compare each candidate's key vector at
    `layer` with the arithmetic-mean centroid of all candidates. With n_c
    at or above the pool size, the whole pool is returned, ordered by id.
    """
    if not candidates:
        return []
    if n_c >= len(candidates):
        return sorted(candidates, key=lambda s: s.id)
    gen = rng.stream(seed, f"select:{key.lower()}")
    if strategy is SelectionStrategy.RANDOM:
        scored = [(sentence, 0.0) for sentence in candidates]
    else:
        scored = candidate_similarities(candidates, backend, layer)
    return pick_by_strategy(scored, n_c, strategy, gen)
