"""Wire protocol to external embedding adapters, plus the encoding cache.

Request and response travel as one JSON object per line. Responses may
arrive out of order and are matched by id. The cache stores response
objects keyed by a 64-bit content hash of (model, tokens), so a published
cache file makes model-dependent runs replayable without the adapter.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .embedding import Backend, SentenceEncoding
from .errors import BackendError, ValidationError
from .rng import fnv1a64

_HASH_SEPARATOR = "\x1f"

RESPONSE_FIELDS = ("id", "model", "num_layers", "dim", "alignment", "vectors")


def cache_key(model: str, tokens: Sequence[str]) -> str:
    """16 lowercase hex digits identifying one (model, tokens) encoding."""
    payload = _HASH_SEPARATOR.join([model, *tokens]).encode("utf-8")
    return format(fnv1a64(payload), "016x")


def request_line(sentence_id: str, tokens: Sequence[str]) -> str:
    return json.dumps({"id": sentence_id, "tokens": list(tokens)}, ensure_ascii=False)


def parse_request(line: str) -> tuple[str, list[str]]:
    obj = json.loads(line)
    if not isinstance(obj.get("id"), str) or not isinstance(obj.get("tokens"), list):
        raise BackendError(f"malformed request line: {line!r}")
    return obj["id"], [str(t) for t in obj["tokens"]]


def encoding_to_response(encoding: SentenceEncoding, request_id: str) -> dict:
    """Response object for one encoding, vectors layer-major."""
    obj = {
        "id": request_id,
        "model": encoding.model,
        "num_layers": encoding.num_layers,
        "dim": encoding.dim,
        "alignment": [list(a) for a in encoding.alignment],
        "vectors": [
            [[float(x) for x in piece] for piece in layer]
            for layer in encoding.vectors
        ],
    }
    if encoding.layer_offset:
        obj["layer_offset"] = encoding.layer_offset
    return obj


def response_to_encoding(obj: dict, sentence_id: str) -> SentenceEncoding:
    """Validate a response object and materialize the encoding."""
    missing = [f for f in RESPONSE_FIELDS if f not in obj]
    if missing:
        raise BackendError(f"response missing fields {missing}")
    try:
        vectors = np.array(obj["vectors"], dtype=np.float32)
    except (TypeError, ValueError) as exc:
        raise BackendError(f"response vectors are not numeric: {exc}") from exc
    encoding = SentenceEncoding(
        sentence_id=sentence_id,
        num_layers=int(obj["num_layers"]),
        dim=int(obj["dim"]),
        vectors=vectors,
        alignment=[[int(i) for i in entry] for entry in obj["alignment"]],
        layer_offset=int(obj.get("layer_offset", 0)),
        model=str(obj["model"]),
    )
    try:
        encoding.validate()
    except ValidationError as exc:
        raise BackendError(f"invalid response for id {obj.get('id')!r}: {exc}") from exc
    return encoding


class EncodingCache:
    """Append-only line store of response objects, indexed by content hash.

    Reads are lock-free once loaded; appends are serialized and each record
    is written with a single atomic write.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, dict] = {}
        self._models: set[str] = set()
        self._write_lock = threading.Lock()
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        record = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise BackendError(
                            f"{self.path}:{line_no}: unreadable cache record: {exc}"
                        ) from exc
                    key = record.get("key")
                    if not isinstance(key, str):
                        raise BackendError(f"{self.path}:{line_no}: record lacks a key")
                    self._records[key] = record
                    self._models.add(str(record.get("model", "")))

    def __len__(self) -> int:
        return len(self._records)

    @property
    def models(self) -> set[str]:
        return set(self._models)

    def single_model(self) -> str | None:
        if len(self._models) == 1:
            return next(iter(self._models))
        return None

    def lookup(self, model: str, tokens: Sequence[str]) -> dict | None:
        return self._records.get(cache_key(model, tokens))

    def store(self, tokens: Sequence[str], response: dict) -> None:
        key = cache_key(response["model"], tokens)
        record = {"key": key, "tokens": list(tokens), **response}
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._write_lock:
            if key in self._records:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
            self._records[key] = record
            self._models.add(str(response["model"]))


class CacheBackend(Backend):
    """Replay-only backend over a cache file; any miss is an error."""

    concurrent = True

    def __init__(self, path: str | Path):
        self.cache = EncodingCache(path)
        if len(self.cache) == 0:
            raise BackendError(f"cache {path} is empty; nothing to replay")
        model = self.cache.single_model()
        if model is None:
            raise BackendError(
                f"cache {path} mixes models {sorted(self.cache.models)}; replay "
                "needs exactly one"
            )
        self.model = model

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        record = self.cache.lookup(self.model, tokens)
        if record is None:
            raise BackendError(
                f"cache miss for tokens {list(tokens)!r} under model {self.model!r}"
            )
        return response_to_encoding(record, sentence_id)


class CachingBackend(Backend):
    """Write-through cache around a live backend."""

    def __init__(self, inner: Backend, path: str | Path):
        self.inner = inner
        self.cache = EncodingCache(path)

    @property
    def model(self):  # type: ignore[override]
        return self.inner.model or self.cache.single_model()

    @property
    def concurrent(self):  # type: ignore[override]
        return self.inner.concurrent

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        model = self.model
        if model is not None:
            record = self.cache.lookup(model, tokens)
            if record is not None:
                return response_to_encoding(record, sentence_id)
        encoding = self.inner.encode(list(tokens), sentence_id)
        self.cache.store(tokens, encoding_to_response(encoding, sentence_id))
        return encoding


class RemoteBackend(Backend):
    """Adapter reached over HTTP; requests are serialized."""

    concurrent = False

    def __init__(self, url: str, timeout: float = 120.0):
        self.url = url
        self.timeout = timeout
        self.model: str | None = None
        self._lock = threading.Lock()
        self._session = requests.Session()

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        body = request_line(sentence_id, tokens) + "\n"
        with self._lock:
            try:
                reply = self._session.post(
                    self.url,
                    data=body.encode("utf-8"),
                    headers={"Content-Type": "application/x-ndjson"},
                    timeout=self.timeout,
                )
                reply.raise_for_status()
            except requests.RequestException as exc:
                raise BackendError(f"remote backend failed: {exc}") from exc
        response = self._match_response(reply.text, sentence_id)
        encoding = response_to_encoding(response, sentence_id)
        self.model = self.model or encoding.model
        return encoding

    @staticmethod
    def _match_response(text: str, wanted_id: str) -> dict:
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BackendError(f"unreadable response line: {exc}") from exc
            if obj.get("error"):
                raise BackendError(f"adapter error for {obj.get('id')!r}: {obj['error']}")
            if obj.get("id") == wanted_id:
                return obj
        raise BackendError(f"no response with id {wanted_id!r}")


class SubprocessBackend(Backend):
    """Adapter spoken to over stdin/stdout; one request in flight at a time."""

    concurrent = False

    def __init__(self, command: str):
        self.command = command
        self.model: str | None = None
        self._lock = threading.Lock()
        self._pending: dict[str, dict] = {}
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"cannot start adapter {command!r}: {exc}") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)

    def encode(self, tokens: Sequence[str], sentence_id: str) -> SentenceEncoding:
        with self._lock:
            response = self._pending.pop(sentence_id, None)
            if response is None:
                self._send(request_line(sentence_id, tokens))
                response = self._receive(sentence_id)
        if response.get("error"):
            raise BackendError(
                f"adapter error for {sentence_id!r}: {response['error']}"
            )
        encoding = response_to_encoding(response, sentence_id)
        self.model = self.model or encoding.model
        return encoding

    def _send(self, line: str) -> None:
        if self._proc.poll() is not None:
            raise BackendError(
                f"adapter exited with status {self._proc.returncode}"
            )
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"adapter pipe closed: {exc}") from exc

    def _receive(self, wanted_id: str) -> dict:
        # Out-of-order replies are parked in _pending until their id is asked for.
        while True:
            line = self._proc.stdout.readline()
            if line == "":
                raise BackendError(
                    f"adapter closed its output (exit status {self._proc.poll()})"
                )
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BackendError(f"unreadable response line: {exc}") from exc
            if obj.get("id") == wanted_id:
                return obj
            self._pending[obj.get("id")] = obj


def create_backend(spec: str, cache_path: str | Path | None = None) -> Backend:
    """Build a backend from its spec string.

    Specs: ``mock``, ``cache:<path>``, ``remote:<url>``,
    ``subprocess:<command>``. When `cache_path` is given, remote and
    subprocess backends are wrapped so every response is written through.
    """
    from .embedding import MockBackend

    if spec == "mock":
        return MockBackend()
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ValidationError(f"unusable backend spec {spec!r}")
    if kind == "cache":
        return CacheBackend(arg)
    if kind == "remote":
        backend: Backend = RemoteBackend(arg)
    elif kind == "subprocess":
        backend = SubprocessBackend(arg)
    else:
        raise ValidationError(f"unknown backend kind {kind!r}")
    if cache_path is not None:
        backend = CachingBackend(backend, cache_path)
    return backend
