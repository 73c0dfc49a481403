from pathlib import Path

import pytest
import torch

from cross_model_control.model import (
    CheckpointError,
    ContextExceededError,
    ModelConfig,
    ModelConfigError,
    ModelFrozenError,
    backward,
    forward,
    init_model,
    load_checkpoint,
    save_checkpoint,
)
from cross_model_control.util.custom_types import CmcError
from cross_model_control.util.funcs import params_checksum
from cross_model_control.vocab import TokenSequence, Tokenizer, VocabularyError

TEXTS = [
    "Q: reverse the word apple A: elppa END",
    "Q: what is 2 plus 3 A: 5 END",
    "Q: write river in capitals A: RIVER END",
]

def _sample_index(name: str, param: torch.Tensor, seq: TokenSequence, generator: torch.Generator) -> tuple[int, ...]:
    ''' A random entry of `param`; embedding rows are drawn from those the sequence reads. '''
    def pick(n: int) -> int:
        return int(torch.randint(n, (1,), generator=generator).item())

    match name:
        case 'tok_embed.weight':
            return seq.ids[pick(len(seq))], pick(param.shape[1])
        case 'pos_embed.weight':
            return pick(len(seq)), pick(param.shape[1])
        case _:
            return tuple(pick(n) for n in param.shape)


class TestModelConfig:
    """Test model shape validation."""

    def test_heads_divide_width(self):
        with pytest.raises(ModelConfigError) as exc_info:
            ModelConfig(vocab_size=10, context_len=8, d_model=10, n_layers=1, n_heads=4, d_ff=8)
        assert "not divisible" in str(exc_info.value)

    def test_positive_sizes(self):
        with pytest.raises(ModelConfigError) as exc_info:
            ModelConfig(vocab_size=10, context_len=8, d_model=8, n_layers=0, n_heads=2, d_ff=8)
        assert "n_layers" in str(exc_info.value)

    def test_unknown_key(self):
        with pytest.raises(ModelConfigError) as exc_info:
            ModelConfig.from_dict({'vocab_size': 10, 'width': 3})
        assert "width" in str(exc_info.value)

    def test_presets(self):
        assert ModelConfig.base_default(50).n_layers == 4
        assert ModelConfig.delta_default(50).d_model == 64


class TestInitAndForward:
    """Test initialization and the forward pass."""

    def test_same_seed_same_parameters(self, char_tok: Tokenizer, make_model):
        a, b = make_model(char_tok, seed=3), make_model(char_tok, seed=3)
        assert params_checksum(a.state_dict().items()) == params_checksum(b.state_dict().items())

    def test_different_seed(self, char_tok: Tokenizer, make_model):
        a, b = make_model(char_tok, seed=1), make_model(char_tok, seed=2)
        assert params_checksum(a.state_dict().items()) != params_checksum(b.state_dict().items())

    def test_init_bounds(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok, seed=5)
        for name, param in m.named_parameters():
            module = m.get_submodule(name.rpartition('.')[0])
            if isinstance(module, torch.nn.LayerNorm):
                expected = 1.0 if name.endswith('weight') else 0.0
                assert torch.equal(param, torch.full_like(param, expected)), name
            elif name.endswith('bias'):
                assert not param.any(), name
            else:
                bound = 1 / param.shape[1] ** 0.5
                assert param.abs().max().item() <= bound, name
                assert param.abs().max().item() > bound / 2, name

    def test_shape(self, char_tok: Tokenizer, make_model):
        seq = char_tok.encode("Q: apple", add_bos=True)
        out = forward(make_model(char_tok), seq)
        assert tuple(out.values.shape) == (len(seq), len(char_tok.vocab))
        assert out.vocab_tag == char_tok.vocab.tag
        assert torch.equal(out.last(), out.values[-1])

    def test_causal(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok)
        seq = char_tok.encode("Q: what is 2 plus 3", add_bos=True)
        full = forward(m, seq).values
        head = forward(m, seq[:5]).values
        assert torch.allclose(full[:5], head, atol=1e-6)

    def test_context_exceeded(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok)
        seq = TokenSequence((4,) * (m.config.context_len + 1), char_tok.vocab.tag)
        with pytest.raises(ContextExceededError) as exc_info:
            forward(m, seq)
        assert "context exceeded" in str(exc_info.value)

    def test_vocabulary_mismatch(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok)
        with pytest.raises(VocabularyError) as exc_info:
            forward(m, TokenSequence((0, 4), "v9-other"))
        assert "vocabulary mismatch" in str(exc_info.value)


class TestBackward:
    """Test reverse-mode gradients."""

    def test_matches_finite_difference(self, char_tok: Tokenizer, make_model):
        h = 1e-5
        for draw in range(50):
            m = make_model(char_tok, seed=draw).double()
            generator = torch.Generator().manual_seed(draw)
            text = TEXTS[draw % len(TEXTS)][: 6 + draw % 24]
            seq = char_tok.encode(text, add_bos=True)
            d_logits = torch.randn(len(seq), len(char_tok.vocab), generator=generator, dtype=torch.float64)
            grads = backward(m, seq, d_logits)

            def objective() -> float:
                with torch.no_grad():
                    return (m(seq.as_tensor()) * d_logits).sum().item()

            for name, param in m.named_parameters():
                index = _sample_index(name, param, seq, generator)
                with torch.no_grad():
                    param[index] += h
                    up = objective()
                    param[index] -= 2 * h
                    down = objective()
                    param[index] += h
                numeric = (up - down) / (2 * h)
                analytic = grads[name][index].item()
                assert abs(numeric - analytic) <= 1e-4 * max(abs(numeric), abs(analytic)) + 1e-6, (draw, name, index)

    def test_frozen(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok).freeze()
        seq = char_tok.encode("ab", add_bos=True)
        with pytest.raises(ModelFrozenError) as exc_info:
            backward(m, seq, torch.zeros(len(seq), len(char_tok.vocab)))
        assert "frozen" in str(exc_info.value)
        assert not any(p.requires_grad for p in m.parameters())

    def test_shape_mismatch(self, char_tok: Tokenizer, make_model):
        m = make_model(char_tok)
        seq = char_tok.encode("ab", add_bos=True)
        with pytest.raises(CmcError) as exc_info:
            backward(m, seq, torch.zeros(1, 1))
        assert "does not match" in str(exc_info.value)


class TestCheckpoint:
    """Test the checkpoint format."""

    def test_round_trip_is_bitwise(self, tmp_path: Path, char_tok: Tokenizer, make_model):
        m = make_model(char_tok, seed=7)
        save_checkpoint(m, tmp_path / "m.ckpt")
        loaded = load_checkpoint(tmp_path / "m.ckpt")
        assert loaded.config == m.config
        assert loaded.vocab_tag == char_tok.vocab.tag
        for (name, a), (_, b) in zip(m.state_dict().items(), loaded.state_dict().items()):
            assert torch.equal(a, b), name
        seq = char_tok.encode("Q: river", add_bos=True)
        assert torch.equal(forward(m, seq).values, forward(loaded, seq).values)

    def test_not_a_checkpoint(self, write_text):
        with pytest.raises(CheckpointError) as exc_info:
            load_checkpoint(write_text("m.ckpt", "hello there, not a model"))
        assert "not a checkpoint" in str(exc_info.value)

    def test_truncated(self, tmp_path: Path, char_tok: Tokenizer, make_model):
        save_checkpoint(make_model(char_tok), tmp_path / "m.ckpt")
        raw = (tmp_path / "m.ckpt").read_bytes()
        (tmp_path / "cut.ckpt").write_bytes(raw[:-40])
        with pytest.raises(CheckpointError) as exc_info:
            load_checkpoint(tmp_path / "cut.ckpt")
        assert "truncated" in str(exc_info.value)

    def test_unchanged_file(self, tmp_path: Path, char_tok: Tokenizer, make_model):
        m = make_model(char_tok)
        save_checkpoint(m, tmp_path / "a.ckpt")
        save_checkpoint(load_checkpoint(tmp_path / "a.ckpt"), tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_untagged_model(self):
        m = init_model(ModelConfig(vocab_size=6, context_len=4, d_model=4, n_layers=1, n_heads=1, d_ff=4))
        assert m.vocab_tag is None
