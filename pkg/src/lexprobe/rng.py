"""Deterministic pseudo-randomness for every stochastic choice in the toolkit.

A single generator family (xorshift64*) seeded through FNV-1a-64 keeps all
sampling reproducible across platforms and implementation languages: the
generator works on unsigned 64-bit integers only and never touches the host
language's RNG.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211

# Substitute state for a zero seed; xorshift64* has no zero state.
ZERO_SEED_SUBSTITUTE = 0x9E3779B97F4A7C15

_XORSHIFT_MULTIPLIER = 2685821657736338717


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


class Xorshift64Star:
    """xorshift64* generator over unsigned 64-bit state."""

    def __init__(self, seed: int):
        state = seed & MASK64
        if state == 0:
            state = ZERO_SEED_SUBSTITUTE
        self._state = state

    def next_u64(self) -> int:
        s = self._state
        s ^= s >> 12
        s = (s ^ (s << 25)) & MASK64
        s ^= s >> 27
        self._state = s
        return (s * _XORSHIFT_MULTIPLIER) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling on 64-bit outputs."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        span = MASK64 + 1
        limit = span - span % n
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items, k: int) -> list:
        """k items drawn without replacement (all items if k exceeds the size)."""
        pool = list(items)
        k = min(k, len(pool))
        # Partial Fisher-Yates: only the first k slots are settled.
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def stream(seed: int, label: str) -> Xorshift64Star:
    """Generator for one purpose, derived as seed XOR FNV-1a-64(label).

    Distinct labels give independent streams for the same run seed, so the
    outcome of one sampling step never depends on the order in which other
    steps consume randomness.
    """
    return Xorshift64Star((seed & MASK64) ^ fnv1a64(label.encode("utf-8")))
