"""Per-layer token embeddings: backend contract, pooling, and similarity.

Vector payloads are 32-bit floats throughout; every aggregation (means, dot
products, norms) accumulates in 64-bit. The bundled mock backend is a pure
function of the token strings, so any experiment run against it is
bit-reproducible on every platform.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import BackendError, ValidationError
from .rng import Xorshift64Star, fnv1a64

MOCK_DIM = 16
MOCK_LAYERS = 3
# Blend weight of the surrounding tokens at mock layers 1 and 2.
MOCK_ALPHAS = (0.25, 0.5)


@dataclass(frozen=True)
class WordVector:
    """One word's representation at one layer."""

    values: np.ndarray  # float32, shape (dim,)
    layer: int

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass
class SentenceEncoding:
    """All layers of one sentence plus the token-to-piece alignment."""

    sentence_id: str
    num_layers: int
    dim: int
    vectors: np.ndarray  # float32, shape (num_layers, num_pieces, dim)
    alignment: list[list[int]]  # alignment[token] = piece indices it spans
    layer_offset: int = 0  # added to layer indices in human-facing reports
    model: str = ""

    def validate(self) -> None:
        if self.vectors.dtype != np.float32:
            raise ValidationError("encoding vectors must be 32-bit floats")
        if self.vectors.ndim != 3:
            raise ValidationError("encoding vectors must be layer-major 3-D")
        layers, pieces, dim = self.vectors.shape
        if layers != self.num_layers or dim != self.dim:
            raise ValidationError(
                f"encoding shape {self.vectors.shape} disagrees with declared "
                f"num_layers={self.num_layers} dim={self.dim}"
            )
        seen: list[int] = []
        for token_pieces in self.alignment:
            seen.extend(token_pieces)
        if sorted(seen) != list(range(pieces)):
            raise ValidationError(
                "alignment must cover piece indices 0..P-1 exactly once"
            )
        if not np.isfinite(self.vectors).all():
            raise ValidationError("encoding contains non-finite values")


class Backend:
    """Produces a SentenceEncoding for a token sequence.

    Implementations must be deterministic: identical tokens yield identical
    vectors. `concurrent` declares whether unrestricted parallel calls are
    safe; serializing callers is the caller's job when it is False.
    """

    model: str | None = None
    concurrent: bool = False

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        raise NotImplementedError


def encode(backend: Backend, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
    """Encode one sentence, enforcing the encoding invariants."""
    if not tokens:
        raise ValidationError("cannot encode an empty token sequence")
    encoding = backend.encode(list(tokens), sentence_id)
    encoding.validate()
    return encoding


def word_repr(encoding: SentenceEncoding, token_index: int, layer: int) -> WordVector:
    """Representation of one token at one layer, averaging over its pieces."""
    if not 0 <= token_index < len(encoding.alignment):
        raise ValidationError(f"token index {token_index} out of range")
    if not 0 <= layer < encoding.num_layers:
        raise ValidationError(f"layer {layer} out of range")
    pieces = encoding.alignment[token_index]
    if not pieces:
        raise ValidationError(f"token {token_index} owns no pieces")
    if len(pieces) == 1:
        return WordVector(values=encoding.vectors[layer, pieces[0]].copy(), layer=layer)
    stack = encoding.vectors[layer, pieces].astype(np.float64)
    pooled = stack.mean(axis=0)
    # Triangle inequality: the pooled norm can never exceed the largest piece norm.
    piece_norms = np.sqrt((stack * stack).sum(axis=1))
    pooled_norm = math.sqrt(float(pooled @ pooled))
    if pooled_norm > float(piece_norms.max()) * (1.0 + 1e-6) + 1e-12:
        raise ValidationError("pooled representation violates the norm bound")
    return WordVector(values=pooled.astype(np.float32), layer=layer)


def cosine(a: WordVector, b: WordVector) -> float:
    """Cosine similarity in [-1, 1], accumulated in 64-bit."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.layer != b.layer:
        raise ValidationError(f"layer mismatch: {a.layer} vs {b.layer}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = math.sqrt(float(av @ av))
    nb = math.sqrt(float(bv @ bv))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine is undefined for a zero-norm vector")
    return min(1.0, max(-1.0, float(av @ bv) / (na * nb)))


@lru_cache(maxsize=None)
def _mock_base(token_lower: str) -> tuple[float, ...]:
    """Context-free unit vector for one token, as exact float32 values.

    The token hash seeds a private xorshift64* stream; 16 draws in [-1, 1)
    are normalized in 64-bit and rounded once to 32-bit.
    """
    seed = fnv1a64(token_lower.encode("utf-8"))
    gen = Xorshift64Star(seed)  # zero hash falls back to the fixed substitute
    raw = [2.0 * gen.random() - 1.0 for _ in range(MOCK_DIM)]
    norm_sq = 0.0
    for v in raw:
        norm_sq += v * v
    norm = math.sqrt(norm_sq)
    return tuple(float(np.float32(v / norm)) for v in raw)


def mock_encode(tokens: Sequence[str], sentence_id: str = "") -> SentenceEncoding:
    """Deterministic 3-layer, 16-dim stand-in for a contextual model.

    Layer 0 is context-free. Layers 1 and 2 blend each token's base vector
    with the mean base vector of the other tokens (weights 0.25 and 0.5) and
    renormalize, mimicking increasing contextualization. Single-token
    sentences reuse the base vector at every layer.
    """
    if not tokens:
        raise ValidationError("cannot encode an empty token sequence")
    bases = [_mock_base(t.lower()) for t in tokens]
    n = len(tokens)
    layers: list[list[tuple[float, ...]]] = [list(bases)]
    for alpha in MOCK_ALPHAS:
        row: list[tuple[float, ...]] = []
        for i in range(n):
            if n == 1:
                row.append(bases[0])
                continue
            acc = [0.0] * MOCK_DIM
            for j in range(n):
                if j == i:
                    continue
                bj = bases[j]
                for d in range(MOCK_DIM):
                    acc[d] += bj[d]
            blended = [
                (1.0 - alpha) * bases[i][d] + alpha * (acc[d] / (n - 1))
                for d in range(MOCK_DIM)
            ]
            norm_sq = 0.0
            for v in blended:
                norm_sq += v * v
            norm = math.sqrt(norm_sq)
            row.append(tuple(float(np.float32(v / norm)) for v in blended))
        layers.append(row)
    vectors = np.array(layers, dtype=np.float32)
    return SentenceEncoding(
        sentence_id=sentence_id,
        num_layers=MOCK_LAYERS,
        dim=MOCK_DIM,
        vectors=vectors,
        alignment=[[i] for i in range(n)],
        model="mock",
    )


class MockBackend(Backend):
    """Backend wrapper around mock_encode; safe for concurrent use."""

    model = "mock"
    concurrent = True

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        return mock_encode(tokens, sentence_id)


class Memoizer(Backend):
    """In-memory per-run memo of encodings, keyed by the token sequence.

    Substituted sentences repeat across trials (the same target is injected
    into many sentences), so memoization removes the dominant encoding cost.
    A non-concurrent inner backend is serialized behind a lock.
    """

    concurrent = True

    def __init__(self, inner: Backend):
        self.inner = inner
        self._memo: dict[tuple[str, ...], SentenceEncoding] = {}
        self._lock = threading.Lock()
        self._call_lock = threading.Lock()

    @property
    def model(self):  # type: ignore[override]
        return self.inner.model

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        key = tuple(tokens)
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        if self.inner.concurrent:
            encoding = self.inner.encode(list(tokens), sentence_id)
        else:
            with self._call_lock:
                encoding = self.inner.encode(list(tokens), sentence_id)
        with self._lock:
            return self._memo.setdefault(key, encoding)


class ShapeGuard(Backend):
    """Rejects responses whose dimensions drift from the first one seen."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self._expected: tuple[int, int] | None = None
        self._lock = threading.Lock()

    @property
    def model(self):  # type: ignore[override]
        return self.inner.model

    @property
    def concurrent(self):  # type: ignore[override]
        return self.inner.concurrent

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        encoding = self.inner.encode(list(tokens), sentence_id)
        shape = (encoding.num_layers, encoding.dim)
        with self._lock:
            if self._expected is None:
                self._expected = shape
            elif self._expected != shape:
                raise BackendError(
                    f"backend changed shape mid-run: {self._expected} -> {shape}"
                )
        return encoding
