import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "hello", "world", "storm", "rain", "wind", "the", "a", "cold",
    "##iness", "##y", "##s",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A saved wordpiece model small enough to run in every test."""
    target = tmp_path_factory.mktemp("tiny-model")
    tokenizer = BertTokenizer(
        vocab={word: index for index, word in enumerate(VOCAB)}, do_lower_case=True
    )
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=3,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=16,
    )
    model = BertModel(config)
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return str(target)


@pytest.fixture(scope="session")
def tiny_model(tiny_model_dir):
    from lexprobe_adapter.service import AdapterConfig, HiddenStateModel

    return HiddenStateModel(AdapterConfig(model=tiny_model_dir))
