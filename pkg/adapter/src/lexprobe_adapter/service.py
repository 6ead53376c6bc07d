"""Hidden-state extraction behind the line-delimited encoding protocol.

For each request the words are tokenized into pieces with a kept
word-to-piece alignment, the model runs in deterministic inference mode,
and the response carries layer-major float32 vectors. Boundary pieces
(CLS/SEP-style markers) are trimmed from the payload so every remaining
piece belongs to exactly one input word. Wordpiece models whose first
hidden state is the position-summed embedding layer serve their contextual
layers as payload indices 0..L-1 with ``layer_offset: 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


@dataclass
class AdapterConfig:
    model: str
    device: str = "cpu"
    max_batch: int = 8
    mode: str = "stdio"  # stdio | http
    host: str = "127.0.0.1"
    port: int = 8391


class RequestTooLong(Exception):
    """The piece sequence exceeds the model's position budget."""


class HiddenStateModel:
    """One loaded model plus its tokenizer, in deterministic eval mode."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        if config.model.startswith("elmo:"):
            raise RuntimeError(
                "character-model serving needs the allennlp ELMo runtime, which "
                "is not installed; use a transformers-loadable model instead"
            )
        torch.manual_seed(0)
        torch.set_num_threads(1)  # keeps repeated inference bit-identical
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModel.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()
        model_config = self.model.config
        self.num_layers = int(model_config.num_hidden_layers)
        self.dim = int(model_config.hidden_size)
        # payload drops the non-contextual embedding layer, hence the offset
        self.layer_offset = 1
        self.max_positions = int(
            getattr(model_config, "max_position_embeddings", 0) or 0
        )

    @property
    def name(self) -> str:
        return self.config.model

    def pieces_for_word(self, word: str) -> list[str]:
        pieces = self.tokenizer.tokenize(word)
        if not pieces:
            pieces = [self.tokenizer.unk_token]
        return pieces

    def vocab_coverage(self, tokens: Sequence[str]) -> float:
        """Fraction of tokens the vocabulary holds as a single piece."""
        if not tokens:
            return 0.0
        single = sum(1 for t in tokens if len(self.pieces_for_word(t)) == 1)
        return single / len(tokens)

    def encode(self, tokens: Sequence[str]) -> tuple[np.ndarray, list[list[int]]]:
        """Layer-major float32 vectors and the word-to-piece alignment.

        The returned array has shape (num_layers, pieces, dim); boundary
        markers are already trimmed away.
        """
        if not tokens:
            raise ValueError("empty token sequence")
        per_word = [self.pieces_for_word(w) for w in tokens]
        flat: list[str] = []
        alignment: list[list[int]] = []
        for pieces in per_word:
            start = len(flat)
            flat.extend(pieces)
            alignment.append(list(range(start, start + len(pieces))))
        total = len(flat) + 2  # boundary markers are part of the budget
        if self.max_positions and total > self.max_positions:
            raise RequestTooLong(
                f"{total} pieces exceed the model's {self.max_positions} positions"
            )
        ids = (
            [self.tokenizer.cls_token_id]
            + self.tokenizer.convert_tokens_to_ids(flat)
            + [self.tokenizer.sep_token_id]
        )
        with torch.no_grad():
            output = self.model(
                torch.tensor([ids], device=self.config.device),
                output_hidden_states=True,
            )
        hidden = output.hidden_states  # embeddings + one state per layer
        stacked = torch.stack(hidden[1:], dim=0)[:, 0, 1:-1, :]
        vectors = stacked.to(torch.float32).cpu().numpy()
        return vectors, alignment

    def handle_request(self, line: str) -> dict:
        """One protocol request line to one response object."""
        try:
            request = json.loads(line)
            request_id = request["id"]
            tokens = [str(t) for t in request["tokens"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            return {"id": None, "error": f"malformed request: {exc}"}
        if not tokens:
            return {"id": request_id, "error": "empty token sequence"}
        try:
            vectors, alignment = self.encode(tokens)
        except RequestTooLong as exc:
            return {"id": request_id, "error": str(exc)}
        return {
            "id": request_id,
            "model": self.name,
            "num_layers": self.num_layers,
            "dim": self.dim,
            "alignment": alignment,
            "vectors": [
                [[float(x) for x in piece] for piece in layer] for layer in vectors
            ],
            "layer_offset": self.layer_offset,
        }


SELFTEST_REQUEST = {"id": "selftest", "tokens": ["hello"]}


def selftest_pair(model: HiddenStateModel) -> tuple[str, str]:
    """Fixed request/response pair for client-side golden testing."""
    request_line = json.dumps(SELFTEST_REQUEST)
    response_line = json.dumps(model.handle_request(request_line))
    return request_line, response_line
