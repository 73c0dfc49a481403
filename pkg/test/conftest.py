from pathlib import Path

import pytest
import torch

from cross_model_control.model import ModelConfig, TinyTransformer, init_model
from cross_model_control.vocab import Tokenizer, TokenizerScheme, build_vocab

CORPUS = [
    "Q: reverse the word apple A: elppa END",
    "Q: what is 2 plus 3 A: 5 END",
    "Q: write river in capitals A: RIVER END",
]

def tiny_config(vocab_size: int, *, seed: int = 0, context_len: int = 96) -> ModelConfig:
    return ModelConfig(vocab_size, context_len, d_model=8, n_layers=1, n_heads=2, d_ff=16, seed=seed)

@pytest.fixture
def char_tok() -> Tokenizer:
    return build_vocab(CORPUS, TokenizerScheme.CHAR, 64)

@pytest.fixture
def merge_tok() -> Tokenizer:
    return build_vocab(CORPUS, TokenizerScheme.MERGE, 72)

@pytest.fixture
def make_model():
    ''' Factory: a tiny seeded model fitted to a tokenizer. '''
    def make(tok: Tokenizer, seed: int = 0) -> TinyTransformer:
        return init_model(tiny_config(len(tok.vocab), seed=seed), tok.vocab.tag)
    return make

@pytest.fixture
def uniform_model():
    ''' Factory: a model whose logits are all zero, i.e. uniform next-token probabilities. '''
    def make(tok: Tokenizer) -> TinyTransformer:
        model = init_model(tiny_config(len(tok.vocab)), tok.vocab.tag)
        with torch.no_grad():
            model.head.weight.zero_()
            model.head.bias.zero_()
        return model
    return make

@pytest.fixture
def write_text(tmp_path: Path):
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return write
