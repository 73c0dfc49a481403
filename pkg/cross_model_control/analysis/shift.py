import logging
from dataclasses import dataclass
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.compose import log_softmax
from cross_model_control.model import TinyTransformer, forward
from cross_model_control.tokenmap import UNMAPPED, TokenMapping
from cross_model_control.train import SupervisedPair
from cross_model_control.util.custom_types import CmcError
from cross_model_control.vocab import Tokenizer, VocabularyError
from .sinkhorn import PointCloud, SinkhornConfig, sinkhorn_divergence

logger = logging.getLogger(__name__)

class ShiftError(CmcError):
    pass

@dataclass(frozen=True)
class ShiftTensor:
    '''
    Change in log-probabilities caused by fine-tuning, one row per
    response token: log_softmax(tuned) - log_softmax(vanilla).
    '''
    values: torch.Tensor
    ''' (m, |V|) float64 '''
    vocab_tag: str
    source: tuple[str, str]
    ''' (vanilla model id, tuned model id) '''
    response_span: tuple[int, int]
    ''' [start, stop) of the logits rows used. '''
    tuned_logits: torch.Tensor
    ''' (m, |V|) raw logits of the tuned model on the same rows. '''

    @property
    def positions(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]

    def truncated(self, m: int) -> 'ShiftTensor':
        ''' Keep the first `m` response rows. '''
        if not 1 <= m <= self.positions:
            raise ShiftError(f"Cannot keep {m} of {self.positions} rows")
        start, _ = self.response_span
        return ShiftTensor(self.values[:m], self.vocab_tag, self.source, (start, start + m), self.tuned_logits[:m])

def logit_shift(
        vanilla: TinyTransformer,
        tuned: TinyTransformer,
        pair: SupervisedPair,
        tok: Tokenizer,
        source: tuple[str, str] = ('vanilla', 'tuned'),
) -> ShiftTensor:
    for role, m in (('vanilla', vanilla), ('tuned', tuned)):
        if m.config.vocab_size != len(tok.vocab) or m.vocab_tag not in (None, tok.vocab.tag):
            raise VocabularyError(f"vocabulary mismatch: {role} model does not fit tokenizer {tok.vocab.tag}")

    enc = tok.encode_pair(pair.prompt, pair.response, add_eos=False)
    # row t scores token t + 1
    start, stop = enc.response_start - 1, len(enc.seq) - 1
    if stop <= start:
        raise ShiftError(f"No response tokens in {pair.response!r}")

    zeta_v = forward(vanilla, enc.seq).values[start:stop].to(torch.float64)
    zeta_d = forward(tuned, enc.seq).values[start:stop].to(torch.float64)
    return ShiftTensor(
        values=log_softmax(zeta_d) - log_softmax(zeta_v),
        vocab_tag=tok.vocab.tag,
        source=source,
        response_span=(start, stop),
        tuned_logits=zeta_d,
    )

def project(t1: ShiftTensor, t2: ShiftTensor, mapping: TokenMapping) -> tuple[torch.Tensor, torch.Tensor]:
    '''
    Bring `t2` into `t1`'s vocabulary space through `mapping`
    (t1 vocabulary -> t2 vocabulary). Coordinates whose t1 token is
    unmapped are dropped from both sides.
    '''
    if mapping.user_size != t1.vocab_size or mapping.delta_size != t2.vocab_size:
        raise ShiftError(
            f"Mapping is {mapping.user_size} -> {mapping.delta_size} tokens,"
            f" shift tensors are over {t1.vocab_size} and {t2.vocab_size}")
    entries = torch.tensor(mapping.entries, dtype=torch.long)
    keep = (entries != UNMAPPED).nonzero().squeeze(-1)
    if keep.numel() == 0:
        raise ShiftError("Every coordinate is unmapped")
    return t1.values.index_select(1, keep), t2.values.index_select(1, entries[keep])

def shift_distance(
        t1: ShiftTensor,
        t2: ShiftTensor,
        mapping: TokenMapping,
        epsilon: float = SinkhornConfig.epsilon,
        *,
        iters: int = SinkhornConfig.max_iters,
) -> float:
    '''
    Sinkhorn divergence between the two tensors' rows, each taken
    as a uniform point cloud, divided by t1's vocabulary size.
    '''
    if t1.positions != t2.positions:
        raise ShiftError(f"response length mismatch: {t1.positions} vs {t2.positions}")
    x, y = project(t1, t2, mapping)
    divergence = sinkhorn_divergence(PointCloud.uniform(x), PointCloud.uniform(y), epsilon, iters)
    return divergence / t1.vocab_size
