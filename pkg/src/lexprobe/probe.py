"""Substitution probing: rank a key's targets inside one test sentence.

The key keeps its representation from the original sentence; each target
is substituted in at the key's position and represented from the modified
sentence. Ranking the targets by cosine against the key indirectly ranks
the relation types they carry.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from . import rng
from .corpus import TestSentence
from .embedding import Backend, cosine, encode, word_repr
from .errors import BackendError, ValidationError
from .lexicon import ALL_RELATIONS, RelationType, TargetSet


@dataclass(frozen=True)
class Trial:
    """One substitution experiment unit: a sentence, its key's targets, a layer."""

    sentence: TestSentence
    key: str
    target_set: TargetSet
    layer: int

    def __post_init__(self):
        if self.target_set.key != self.sentence.key:
            raise ValidationError(
                f"target set key {self.target_set.key!r} does not match "
                f"sentence key {self.sentence.key!r}"
            )
        if (
            self.target_set.sense is not None
            and self.sentence.sense is not None
            and self.target_set.sense != self.sentence.sense
        ):
            raise ValidationError(
                f"sense mismatch: {self.target_set.sense!r} vs {self.sentence.sense!r}"
            )


@dataclass(frozen=True)
class RankedTargets:
    """Targets of one trial ordered by non-increasing similarity."""

    trial: Trial
    ranking: tuple[tuple[str, RelationType, float], ...]

    @property
    def top(self) -> tuple[str, RelationType, float]:
        return self.ranking[0]


def substitute(sentence: TestSentence, target: str) -> tuple[str, ...]:
    """Copy of the sentence tokens with the key occurrence replaced by target."""
    tokens = list(sentence.tokens)
    tokens[sentence.key_index] = target
    return tuple(tokens)


def rank_targets(trial: Trial, backend: Backend) -> RankedTargets:
    """Score every target of a trial against the key and sort.

    The key vector is read from the original sentence, the target vector
    from the substituted sentence, both at the trial's layer and the key's
    token position. Ties break lexicographically on the target word.
    """
    sentence = trial.sentence
    original = encode(backend, sentence.tokens, sentence.id)
    key_vec = word_repr(original, sentence.key_index, trial.layer)
    scored: list[tuple[str, RelationType, float]] = []
    for word, relation in trial.target_set.targets:
        try:
            substituted = encode(
                backend, substitute(sentence, word), f"{sentence.id}#{word}"
            )
            target_vec = word_repr(substituted, sentence.key_index, trial.layer)
            score = cosine(key_vec, target_vec)
        except (BackendError, ValidationError) as exc:
            raise BackendError(f"target {word!r}: {exc}") from exc
        scored.append((word, relation, score))
    scored.sort(key=lambda item: (-item[2], item[0]))
    return RankedTargets(trial=trial, ranking=tuple(scored))


def p_at_1_by_relation(
    rankings: list[RankedTargets],
) -> dict[RelationType, float]:
    """Fraction of rankings whose top target carries each relation type."""
    if not rankings:
        raise ValidationError("no rankings to aggregate")
    counts: Counter[RelationType] = Counter(r.top[1] for r in rankings)
    return {
        relation: counts.get(relation, 0) / len(rankings)
        for relation in ALL_RELATIONS
    }


def random_baseline(
    trials: list[Trial], runs: int = 100, seed: int = 0
) -> dict[RelationType, float]:
    """Random-ranker P@1 per relation, averaged over seeded runs.

    Each run permutes every trial's targets uniformly at random and counts
    which relation lands on top.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    if not trials:
        raise ValidationError("no trials for the baseline")
    totals = {relation: 0.0 for relation in ALL_RELATIONS}
    for run in range(runs):
        gen = rng.stream(seed, f"baseline:{run}")
        counts: Counter[RelationType] = Counter()
        for trial in trials:
            permuted = list(trial.target_set.targets)
            gen.shuffle(permuted)
            counts[permuted[0][1]] += 1
        for relation in ALL_RELATIONS:
            totals[relation] += counts.get(relation, 0) / len(trials)
    return {relation: totals[relation] / runs for relation in ALL_RELATIONS}
