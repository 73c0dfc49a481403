import logging
import math
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch
import torch.nn as nn
import torch.nn.functional as F

from cross_model_control.util.custom_types import CmcError
from cross_model_control.vocab import TokenSequence, VocabularyError
from .config import ModelConfig

logger = logging.getLogger(__name__)

# region Errors

class ModelFrozenError(CmcError):
    def __init__(self, *args, **kwargs):
        super().__init__("model is frozen", *args, **kwargs)

class ContextExceededError(CmcError):
    def __init__(self, length: int, context_len: int, side: str | None = None, *args, **kwargs):
        where = f" on the {side} side" if side else ""
        super().__init__(
            f"context exceeded{where}: {length} tokens, window is {context_len}",
            *args, **kwargs)
        self.side = side

# endregion Errors

class LogitsMatrix(NamedTuple):
    values: torch.Tensor
    ''' positions x |V|, unnormalized natural-log scale. '''
    vocab_tag: str | None

    @property
    def positions(self) -> int:
        return self.values.shape[-2]

    def last(self) -> torch.Tensor:
        return self.values[..., -1, :]

class CausalSelfAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.qkv = nn.Linear(cfg.d_model, 3 * cfg.d_model)
        self.out = nn.Linear(cfg.d_model, cfg.d_model)
        self.register_buffer(
            'mask',
            torch.tril(torch.ones(cfg.context_len, cfg.context_len, dtype=torch.bool)),
            persistent=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        B, T, C = x.shape
        qkv = self.qkv(x).reshape(B, T, 3, self.n_heads, C // self.n_heads).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        att = (q @ k.transpose(-2, -1)) / math.sqrt(C // self.n_heads)
        att = att.masked_fill(~self.mask[:T, :T], float('-inf'))
        att = F.softmax(att, dim=-1)
        y = (att @ v).transpose(1, 2).reshape(B, T, C)
        return self.out(y)

class DecoderBlock(nn.Module):
    ''' Pre-norm attention and GELU feed-forward, each with a residual. '''
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = CausalSelfAttention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ffn = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_ff),
            nn.GELU(),
            nn.Linear(cfg.d_ff, cfg.d_model),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x))
        x = x + self.ffn(self.ln2(x))
        return x

class TinyTransformer(nn.Module):
    '''
    Decoder-only language model. Learned absolute positions,
    no weight tying, no dropout.

    Plays the template, the user and the delta model
    at different configured sizes.
    '''
    def __init__(self, cfg: ModelConfig, vocab_tag: str | None = None):
        super().__init__()
        self.config: Final = cfg
        self.vocab_tag = vocab_tag
        ''' Tag of the vocabulary this model was trained over, once known. '''
        self._frozen = False

        self.tok_embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.pos_embed = nn.Embedding(cfg.context_len, cfg.d_model)
        self.blocks = nn.ModuleList(DecoderBlock(cfg) for _ in range(cfg.n_layers))
        self.ln_f = nn.LayerNorm(cfg.d_model)
        self.head = nn.Linear(cfg.d_model, cfg.vocab_size)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> Self:
        self.requires_grad_(False)
        self._frozen = True
        return self

    def unfreeze(self) -> Self:
        self.requires_grad_(True)
        self._frozen = False
        return self

    @torch.no_grad()
    def reset_parameters(self, generator: torch.Generator) -> None:
        '''
        Uniform in +-1/sqrt(fan_in) for embeddings and projections,
        fan_in being the second dimension of the weight (d_model for
        embeddings); zero biases and layer norm offsets; unit gains.
        Parameters are drawn in `named_parameters` order.
        '''
        for name, param in self.named_parameters():
            module_name, _, kind = name.rpartition('.')
            module = self.get_submodule(module_name)
            match module, kind:
                case nn.LayerNorm(), 'weight':
                    param.fill_(1.0)
                case _, 'bias':
                    param.zero_()
                case nn.Embedding() | nn.Linear(), 'weight':
                    # fan_in is size(1) for both, as torch.nn.init counts it
                    bound = 1 / math.sqrt(param.shape[1])
                    param.uniform_(-bound, bound, generator=generator)
                case _:
                    raise AssertionError(f"No init rule for parameter {name}")

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        '''
        Args:
            ids: (T,) or (B, T) token ids.
        Returns:
            Logits of shape (T, |V|) or (B, T, |V|).
        '''
        unbatched = ids.dim() == 1
        if unbatched:
            ids = ids.unsqueeze(0)
        T = ids.shape[1]
        if T > self.config.context_len:
            raise ContextExceededError(T, self.config.context_len)
        positions = torch.arange(T, device=ids.device)
        x = self.tok_embed(ids) + self.pos_embed(positions)
        for block in self.blocks:
            x = block(x)
        logits = self.head(self.ln_f(x))
        return logits.squeeze(0) if unbatched else logits

def init_model(cfg: ModelConfig, vocab_tag: str | None = None) -> TinyTransformer:
    '''
    Fresh model with parameters drawn from `cfg.seed`.
    Identical seed and config give bitwise-identical parameters.

    >>> m = init_model(ModelConfig(vocab_size=10, context_len=4, d_model=4, n_layers=1, n_heads=2, d_ff=8))
    >>> tuple(m.tok_embed.weight.shape)
    (10, 4)
    '''
    model = TinyTransformer(cfg, vocab_tag)
    generator = torch.Generator().manual_seed(cfg.seed)
    model.reset_parameters(generator)
    model.eval()
    logger.debug(f"Initialized model with {sum(p.numel() for p in model.parameters())} parameters (seed {cfg.seed})")
    return model

def _check_sequence(m: TinyTransformer, seq: TokenSequence) -> torch.Tensor:
    if m.vocab_tag is not None and seq.vocab_tag != m.vocab_tag:
        raise VocabularyError(
            f"vocabulary mismatch: sequence tagged {seq.vocab_tag}, model expects {m.vocab_tag}")
    if len(seq) == 0:
        raise CmcError("Cannot run a model on an empty sequence.")
    if len(seq) > m.config.context_len:
        raise ContextExceededError(len(seq), m.config.context_len)
    bad = [i for i in seq.ids if not 0 <= i < m.config.vocab_size]
    if bad:
        raise VocabularyError(f"Token ids out of range for a {m.config.vocab_size}-token model: {bad[:5]}")
    return seq.as_tensor()

def forward(m: TinyTransformer, seq: TokenSequence) -> LogitsMatrix:
    ''' Inference-mode forward pass; row t scores the token after `seq[t]`. '''
    ids = _check_sequence(m, seq)
    with torch.no_grad():
        values = m(ids)
    if not torch.isfinite(values).all():
        raise CmcError("Model produced non-finite logits.")
    return LogitsMatrix(values, seq.vocab_tag)

def backward(m: TinyTransformer, seq: TokenSequence, d_logits: torch.Tensor) -> dict[str, torch.Tensor]:
    '''
    Reverse-mode gradients of the forward pass contracted with `d_logits`.
    Leaves the returned gradients in each parameter's `.grad` as well.
    '''
    if m.frozen:
        raise ModelFrozenError()
    ids = _check_sequence(m, seq)
    expected = (len(seq), m.config.vocab_size)
    if tuple(d_logits.shape) != expected:
        raise CmcError(f"dLogits shape {tuple(d_logits.shape)} does not match forward output {expected}")

    m.zero_grad(set_to_none=False)
    with torch.enable_grad():
        logits = m(ids)
        logits.backward(d_logits.to(logits.dtype))
    return {
        name: param.grad.detach().clone() if param.grad is not None else torch.zeros_like(param)
        for name, param in m.named_parameters()
    }
