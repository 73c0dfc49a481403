'''
Steered generation across two tokenizers.

Each step both models read the whole transcript, each through its own
tokenizer: the user model sees `user_tokenizer.encode(transcript)`,
the delta model sees `delta_tokenizer.encode(transcript)`, and the
last row of each is composed. The chosen user token's text is appended
to the transcript.
'''
import enum
import logging
from dataclasses import dataclass, field
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.compose import CompositionMode, CompositionSpec, compose_infer
from cross_model_control.model import ContextExceededError, TinyTransformer, forward
from cross_model_control.util.custom_types import CmcError, ConfigError
from cross_model_control.vocab import TokenSequence, Tokenizer, VocabularyError

logger = logging.getLogger(__name__)

class DecodeError(CmcError):
    pass

class DecodingMode(enum.Enum):
    GREEDY = 'greedy'
    SAMPLE = 'sample'

@dataclass(frozen=True)
class GenerationSpec:
    max_new_tokens: int = 64
    mode: DecodingMode = DecodingMode.GREEDY
    temperature: float = 1.0
    top_k: int | None = None
    seed: int = 0
    stop: str | None = None
    ''' Generation ends once the continuation contains this text (kept in the output). '''

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ConfigError(f"max_new_tokens must be at least 1, got {self.max_new_tokens}")
        if self.mode is DecodingMode.SAMPLE and not self.temperature > 0:
            raise ConfigError(f"temperature must be positive when sampling, got {self.temperature}")
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError(f"top_k must be at least 1, got {self.top_k}")

class StepResult(NamedTuple):
    token_id: int
    logits: torch.Tensor
    ''' Composed logits over the user vocabulary. '''
    unsteered_id: int
    ''' Greedy choice of the user model alone. '''

class Generation(NamedTuple):
    text: str
    token_ids: list[int]
    agreement: float
    ''' Fraction of steps whose choice equals the unsteered greedy choice. '''

# region Delta-side encoding cache

@dataclass
class _EncodingCache:
    '''
    Greedy longest match at a cursor reads at most `max_token_len`
    characters, so a token starting at `s` with `s + max_token_len <= n`
    is unchanged by anything appended after the first `n` characters.
    '''
    tok: Tokenizer
    text: str = ''
    ids: list[int] = field(default_factory=list)
    spans: list[tuple[int, int]] = field(default_factory=list)

    def encode(self, text: str) -> list[int]:
        if not text.startswith(self.text):
            self.text, self.ids, self.spans = '', [], []

        old_len = len(self.text)
        keep = 0
        while keep < len(self.spans) and self.spans[keep][0] + self.tok.max_token_len <= old_len:
            keep += 1
        resume = self.spans[keep - 1][1] if keep else 0

        tail_ids, tail_spans = self.tok.encode_with_offsets(text[resume:])
        self.ids = self.ids[:keep] + tail_ids
        self.spans = self.spans[:keep] + [(start + resume, end + resume) for start, end in tail_spans]
        self.text = text
        return list(self.ids)

# endregion Delta-side encoding cache

@dataclass
class SteeredSession:
    '''
    A user model steered by a delta model, possibly over another vocabulary.

    In `proxy` mode the delta model is the expert and `antiexpert_model`
    is required; both must share the user tokenizer.
    '''
    user_model: TinyTransformer
    user_tokenizer: Tokenizer
    delta_model: TinyTransformer | None
    delta_tokenizer: Tokenizer | None
    composition: CompositionSpec
    antiexpert_model: TinyTransformer | None = None
    transcript: str = ''
    incremental: bool = False
    ''' Reuse the stable prefix of the previous delta-side encoding. '''
    check_incremental: bool = False
    ''' Compare every cached delta-side encoding with a full re-encode. '''

    _cache: _EncodingCache | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self._check_models_match(self.user_model, self.user_tokenizer, 'user')
        spec = self.composition
        if spec.mode is CompositionMode.NONE:
            return
        if self.delta_model is None or self.delta_tokenizer is None:
            raise ConfigError(f"{spec.mode.value} mode needs a delta model and its tokenizer")
        self._check_models_match(self.delta_model, self.delta_tokenizer, 'delta')

        match spec.mode:
            case CompositionMode.PROXY:
                if self.antiexpert_model is None:
                    raise ConfigError("proxy mode needs an anti-expert model")
                self._check_models_match(self.antiexpert_model, self.user_tokenizer, 'anti-expert')
                if self.delta_tokenizer.vocab.tag != self.user_tokenizer.vocab.tag:
                    raise VocabularyError("vocabulary mismatch: proxy mode needs one shared vocabulary")
            case CompositionMode.CMC:
                if spec.mapping is not None:
                    spec.mapping.check_vocabs(self.user_tokenizer.vocab, self.delta_tokenizer.vocab)
                elif self.delta_tokenizer.vocab.tag != self.user_tokenizer.vocab.tag:
                    raise VocabularyError("vocabulary mismatch: differing vocabularies need a token mapping")

        if self.incremental:
            self._cache = _EncodingCache(self.delta_tokenizer)

    @staticmethod
    def _check_models_match(m: TinyTransformer, tok: Tokenizer, side: str) -> None:
        if m.config.vocab_size != len(tok.vocab) or (m.vocab_tag not in (None, tok.vocab.tag)):
            raise VocabularyError(
                f"vocabulary mismatch: {side} model does not fit tokenizer {tok.vocab.tag}")

    def reset(self, transcript: str = '') -> None:
        self.transcript = transcript

    def _encode(self, tok: Tokenizer, m: TinyTransformer, side: str, text: str) -> TokenSequence:
        if side == 'delta' and self._cache is not None:
            ids = [tok.vocab.specials.bos, *self._cache.encode(text)]
            seq = TokenSequence(tuple(ids), tok.vocab.tag)
            if self.check_incremental and seq != tok.encode(text, add_bos=True):
                raise DecodeError(f"Incremental delta encoding diverged from a full re-encode at {text!r}")
        else:
            seq = tok.encode(text, add_bos=True)
        if len(seq) > m.config.context_len:
            raise ContextExceededError(len(seq), m.config.context_len, side)
        return seq

    def logits_after(self, text: str) -> tuple[torch.Tensor, torch.Tensor]:
        '''
        Returns:
            (composed logits, unsteered logits) for the token following `text`,
            both over the user vocabulary.
        '''
        user_seq = self._encode(self.user_tokenizer, self.user_model, 'user', text)
        return self.logits_for(user_seq, text)

    def logits_for(self, user_seq: TokenSequence, text: str) -> tuple[torch.Tensor, torch.Tensor]:
        ''' As `logits_after`, with the user side given as tokens (`text` feeds the delta side). '''
        spec = self.composition
        if len(user_seq) > self.user_model.config.context_len:
            raise ContextExceededError(len(user_seq), self.user_model.config.context_len, 'user')
        zeta_u = forward(self.user_model, user_seq).last()
        unsteered = compose_infer(zeta_u, None, CompositionSpec(CompositionMode.NONE, logsoftmax_on_base=spec.logsoftmax_on_base))

        match spec.mode:
            case CompositionMode.NONE:
                return unsteered, unsteered
            case CompositionMode.CMC:
                assert self.delta_model is not None and self.delta_tokenizer is not None
                delta_seq = self._encode(self.delta_tokenizer, self.delta_model, 'delta', text)
                zeta_d = forward(self.delta_model, delta_seq).last()
                return compose_infer(zeta_u, zeta_d, spec), unsteered
            case CompositionMode.PROXY:
                assert self.delta_model is not None and self.antiexpert_model is not None
                zeta_e = forward(self.delta_model, user_seq).last()
                zeta_a = forward(self.antiexpert_model, user_seq).last()
                return compose_infer(zeta_u, zeta_e, spec, zeta_antiexpert=zeta_a), unsteered

def _select(logits: torch.Tensor, spec: GenerationSpec, generator: torch.Generator | None) -> int:
    match spec.mode:
        case DecodingMode.GREEDY:
            return int(torch.argmax(logits).item())
        case DecodingMode.SAMPLE:
            scaled = logits.to(torch.float64) / spec.temperature
            if spec.top_k is not None and spec.top_k < scaled.shape[-1]:
                threshold = torch.topk(scaled, spec.top_k).values[-1]
                scaled = scaled.masked_fill(scaled < threshold, float('-inf'))
            probs = torch.softmax(scaled, dim=-1)
            return int(torch.multinomial(probs, 1, generator=generator).item())

def step(
        sess: SteeredSession,
        spec: GenerationSpec = GenerationSpec(),
        generator: torch.Generator | None = None,
) -> StepResult:
    ''' Choose the next user token after the session's transcript. '''
    composed, unsteered = sess.logits_after(sess.transcript)
    return StepResult(
        token_id=_select(composed, spec, generator),
        logits=composed,
        unsteered_id=int(torch.argmax(unsteered).item()),
    )

def generate_detailed(sess: SteeredSession, prompt: str, spec: GenerationSpec) -> Generation:
    generator = torch.Generator().manual_seed(spec.seed)
    tok = sess.user_tokenizer
    sess.reset(prompt)

    continuation = ''
    token_ids = list[int]()
    agreements = 0
    for _ in range(spec.max_new_tokens):
        result = step(sess, spec, generator)
        token_ids.append(result.token_id)
        agreements += result.token_id == result.unsteered_id
        if result.token_id == tok.vocab.specials.eos:
            break
        continuation += tok.token_text(result.token_id)
        sess.transcript = prompt + continuation
        if spec.stop is not None and spec.stop in continuation:
            continuation = continuation[: continuation.index(spec.stop) + len(spec.stop)]
            break

    logger.debug(f"Generated {len(token_ids)} tokens for prompt {prompt!r}")
    return Generation(continuation, token_ids, agreements / len(token_ids))

def generate(sess: SteeredSession, prompt: str, spec: GenerationSpec) -> str:
    ''' Decoded continuation of `prompt` (the prompt itself is not included). '''
    return generate_detailed(sess, prompt, spec).text
