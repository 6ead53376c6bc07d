"""Reranking a key's distributional neighbors with a contextual model.

Early fusion aggregates each word's per-sentence vectors into one
type-level vector before a single similarity ranking. Late fusion ranks
the neighbors once per test sentence of the key and merges the rankings
with standard list-fusion methods (Borda, Condorcet, reciprocal rank,
CombSum over zero-one-normalized scores).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import TestSentence
from .embedding import Backend, WordVector, cosine, encode, word_repr
from .errors import ValidationError
from .lexicon import NeighborList
from .probe import substitute

DEFAULT_RRF_K = 60.0


class FusionMethod(enum.Enum):
    EARLY_AVG = "average"
    EARLY_MAX = "max"
    EARLY_MIN = "min"
    BORDA = "borda"
    CONDORCET = "condorcet"
    RRF = "rrf"
    COMBSUM = "combsum"


EARLY_METHODS = (FusionMethod.EARLY_AVG, FusionMethod.EARLY_MAX, FusionMethod.EARLY_MIN)
LATE_METHODS = (
    FusionMethod.BORDA,
    FusionMethod.CONDORCET,
    FusionMethod.RRF,
    FusionMethod.COMBSUM,
)


@dataclass(frozen=True)
class RerankResult:
    """A key's neighbors reordered by one fusion method at one layer.

    `ranking` is a permutation of the input neighbor words. Words that
    could not be scored (no eligible sentence) sit at the tail in their
    original relative order and are listed in `unscored`.
    """

    key: str
    method: FusionMethod
    layer: int
    ranking: tuple[tuple[str, Optional[float]], ...]
    unscored: tuple[str, ...] = ()

    def words(self) -> tuple[str, ...]:
        return tuple(word for word, _ in self.ranking)


def early_fuse(vectors: Sequence[WordVector], op: FusionMethod) -> WordVector:
    """Element-wise mean, maximum, or minimum of same-shaped vectors."""
    if not vectors:
        raise ValidationError("nothing to fuse")
    if op not in EARLY_METHODS:
        raise ValidationError(f"{op} is not an early-fusion operator")
    dims = {v.dim for v in vectors}
    layers = {v.layer for v in vectors}
    if len(dims) != 1 or len(layers) != 1:
        raise ValidationError(f"mixed shapes in fusion: dims={dims} layers={layers}")
    stack = np.stack([v.values for v in vectors])
    if op is FusionMethod.EARLY_AVG:
        fused = stack.astype(np.float64).mean(axis=0).astype(np.float32)
    elif op is FusionMethod.EARLY_MAX:
        fused = stack.max(axis=0)
    else:
        fused = stack.min(axis=0)
    return WordVector(values=fused, layer=vectors[0].layer)


def type_vector(
    sentences: Sequence[TestSentence],
    backend: Backend,
    layer: int,
    op: FusionMethod,
) -> WordVector:
    """Type-level vector of a word from its own marked occurrences."""
    if not sentences:
        raise ValidationError("a type-level vector needs at least one sentence")
    occurrence_vectors = [
        word_repr(encode(backend, s.tokens, s.id), s.key_index, layer)
        for s in sentences
    ]
    return early_fuse(occurrence_vectors, op)


def rerank_early(
    key: str,
    neighbors: NeighborList,
    key_sentences: Sequence[TestSentence],
    neighbor_sentences: Mapping[str, Sequence[TestSentence]],
    backend: Backend,
    layer: int,
    op: FusionMethod = FusionMethod.EARLY_AVG,
) -> RerankResult:
    """Order neighbors by similarity between type-level vectors."""
    if not key_sentences:
        raise ValidationError(f"key {key!r} has no test sentences")
    key_vec = type_vector(key_sentences, backend, layer, op)
    scored: list[tuple[str, float]] = []
    unscored: list[str] = []
    for word in neighbors.words():
        sentences = neighbor_sentences.get(word, ())
        if not sentences:
            unscored.append(word)
            continue
        neighbor_vec = type_vector(sentences, backend, layer, op)
        scored.append((word, cosine(key_vec, neighbor_vec)))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    ranking: list[tuple[str, Optional[float]]] = list(scored)
    ranking.extend((word, None) for word in unscored)
    return RerankResult(
        key=key,
        method=op,
        layer=layer,
        ranking=tuple(ranking),
        unscored=tuple(unscored),
    )


def per_sentence_rankings(
    key: str,
    neighbors: NeighborList,
    key_sentences: Sequence[TestSentence],
    backend: Backend,
    layer: int,
) -> list[list[tuple[str, float]]]:
    """One complete (neighbor, cosine) ranking per test sentence of the key.

    Each neighbor is substituted for the key occurrence, exactly as in the
    probing experiment.
    """
    rankings: list[list[tuple[str, float]]] = []
    for sentence in key_sentences:
        original = encode(backend, sentence.tokens, sentence.id)
        key_vec = word_repr(original, sentence.key_index, layer)
        scored = []
        for word in neighbors.words():
            substituted = encode(
                backend, substitute(sentence, word), f"{sentence.id}#{word}"
            )
            neighbor_vec = word_repr(substituted, sentence.key_index, layer)
            scored.append((word, cosine(key_vec, neighbor_vec)))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        rankings.append(scored)
    return rankings


def _check_item_sets(rankings: Sequence[Sequence[str]]) -> tuple[str, ...]:
    if not rankings:
        raise ValidationError("nothing to fuse")
    reference = sorted(rankings[0])
    if len(set(reference)) != len(reference):
        raise ValidationError("duplicate items inside a ranking")
    for ranking in rankings[1:]:
        if sorted(ranking) != reference:
            raise ValidationError("rankings cover different item sets")
    return tuple(reference)


def borda_fuse(rankings: Sequence[Sequence[str]]) -> list[tuple[str, float]]:
    """Sum of (m - rank) points across rankings, highest first."""
    items = _check_item_sets(rankings)
    m = len(items)
    points = {item: 0.0 for item in items}
    for ranking in rankings:
        for position, item in enumerate(ranking, start=1):
            points[item] += m - position
    return sorted(points.items(), key=lambda pair: (-pair[1], pair[0]))


def condorcet_fuse(rankings: Sequence[Sequence[str]]) -> list[tuple[str, float]]:
    """Copeland scoring of pairwise majorities, Borda points as tie-break.

    Item a beats b when strictly more rankings place a above b; the score
    is wins minus losses.
    """
    items = _check_item_sets(rankings)
    positions = [
        {item: position for position, item in enumerate(ranking)}
        for ranking in rankings
    ]
    borda = dict(borda_fuse(rankings))
    copeland = {item: 0.0 for item in items}
    for i, a in enumerate(items):
        for b in items[i + 1 :]:
            a_wins = sum(1 for pos in positions if pos[a] < pos[b])
            b_wins = len(positions) - a_wins
            if a_wins > b_wins:
                copeland[a] += 1
                copeland[b] -= 1
            elif b_wins > a_wins:
                copeland[b] += 1
                copeland[a] -= 1
    return sorted(
        copeland.items(), key=lambda pair: (-pair[1], -borda[pair[0]], pair[0])
    )


def rrf_fuse(
    rankings: Sequence[Sequence[str]], k: float = DEFAULT_RRF_K
) -> list[tuple[str, float]]:
    """Reciprocal-rank fusion: sum of 1/(k + rank) with 1-based ranks."""
    if k <= 0:
        raise ValidationError("rrf constant must be positive")
    items = _check_item_sets(rankings)
    scores = {item: 0.0 for item in items}
    for ranking in rankings:
        for position, item in enumerate(ranking, start=1):
            scores[item] += 1.0 / (k + position)
    return sorted(scores.items(), key=lambda pair: (-pair[1], pair[0]))


def zero_one_normalize(scores: Sequence[float]) -> list[float]:
    """Affine rescale to [0, 1]; a constant list collapses to all zeros."""
    if len(scores) == 0:
        raise ValidationError("nothing to normalize")
    low = min(scores)
    high = max(scores)
    if high == low:
        return [0.0] * len(scores)
    return [(s - low) / (high - low) for s in scores]


def combsum_fuse(
    score_lists: Sequence[Sequence[tuple[str, float]]],
) -> list[tuple[str, float]]:
    """Sum of per-list zero-one-normalized scores, highest first."""
    _check_item_sets([[item for item, _ in lst] for lst in score_lists])
    totals: dict[str, float] = {}
    for lst in score_lists:
        normalized = zero_one_normalize([score for _, score in lst])
        for (item, _), value in zip(lst, normalized):
            totals[item] = totals.get(item, 0.0) + value
    return sorted(totals.items(), key=lambda pair: (-pair[1], pair[0]))


def late_fuse(
    score_lists: Sequence[Sequence[tuple[str, float]]],
    method: FusionMethod,
    rrf_k: float = DEFAULT_RRF_K,
) -> list[tuple[str, float]]:
    """Merge per-sentence (item, score) rankings with one late-fusion method."""
    if method is FusionMethod.COMBSUM:
        return combsum_fuse(score_lists)
    rankings = [[item for item, _ in lst] for lst in score_lists]
    if method is FusionMethod.BORDA:
        return borda_fuse(rankings)
    if method is FusionMethod.CONDORCET:
        return condorcet_fuse(rankings)
    if method is FusionMethod.RRF:
        return rrf_fuse(rankings, k=rrf_k)
    raise ValidationError(f"{method} is not a late-fusion method")


def rerank_late(
    key: str,
    neighbors: NeighborList,
    key_sentences: Sequence[TestSentence],
    backend: Backend,
    layer: int,
    method: FusionMethod,
    rrf_k: float = DEFAULT_RRF_K,
) -> RerankResult:
    """Per-sentence rankings merged into one type-level reranking."""
    if not key_sentences:
        raise ValidationError(f"key {key!r} has no test sentences")
    sentence_rankings = per_sentence_rankings(
        key, neighbors, key_sentences, backend, layer
    )
    fused = late_fuse(sentence_rankings, method, rrf_k=rrf_k)
    return RerankResult(
        key=key,
        method=method,
        layer=layer,
        ranking=tuple((word, score) for word, score in fused),
    )
