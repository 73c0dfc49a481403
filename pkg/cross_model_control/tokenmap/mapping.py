import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import numpy as np
import numpy.typing as npt
import torch

from cross_model_control.util.custom_types import CmcError
from cross_model_control.vocab import Vocabulary
from .strategies import UNMAPPED, DeltaIndex, MappingStrategy, MatchKind, match_token_detailed

logger = logging.getLogger(__name__)

class MappingError(CmcError):
    pass

class MappingStats(NamedTuple):
    exact: int
    prefix_matched: int
    nearest: int
    unmapped: int
    specials: int

    @property
    def mapped(self) -> int:
        return self.exact + self.prefix_matched + self.nearest + self.specials

    def as_dict(self) -> dict[str, int]:
        return {**self._asdict(), 'total': sum(self)}

def compute_stats(
        entries: npt.NDArray[np.int64],
        strategy: MappingStrategy,
        user_vocab: Vocabulary,
        delta_vocab: Vocabulary,
) -> MappingStats:
    ''' Classify every entry of a mapping built (or loaded) for these vocabularies. '''
    counts = dict.fromkeys(MappingStats._fields, 0)
    for user_id, delta_id in enumerate(entries.tolist()):
        if user_vocab.is_special(user_id):
            counts['specials'] += 1
        elif delta_id == UNMAPPED:
            counts['unmapped'] += 1
        elif user_vocab.tokens[user_id] == delta_vocab.tokens[delta_id]:
            counts['exact'] += 1
        elif strategy is MappingStrategy.PM_MINED:
            counts['prefix_matched'] += 1
        else:
            counts['nearest'] += 1
    return MappingStats(**counts)

@dataclass(frozen=True, eq=False)
class TokenMapping:
    '''
    Per-user-token pointer into the delta vocabulary, or UNMAPPED.

    >>> v = Vocabulary.from_content(["a", "b"])
    >>> m = identity_mapping(v)
    >>> m.entries.tolist()
    [0, 1, 2, 3, 4, 5]
    >>> m.is_identity()
    True
    '''
    strategy: MappingStrategy
    entries: npt.NDArray[np.int64]
    delta_size: int
    user_tag: str | None = None
    delta_tag: str | None = None
    stats: MappingStats | None = field(default=None, compare=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.int64)
        if entries.ndim != 1:
            raise MappingError(f"Mapping entries must be one-dimensional, got shape {entries.shape}")
        bad = entries[(entries != UNMAPPED) & ((entries < 0) | (entries >= self.delta_size))]
        if bad.size:
            raise MappingError(
                f"Mapping entries out of range for a delta vocabulary of"
                f" {self.delta_size}: {bad[:5].tolist()}")
        entries.flags.writeable = False
        object.__setattr__(self, 'entries', entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TokenMapping):
            return NotImplemented
        return (
            self.strategy is other.strategy
            and self.delta_size == other.delta_size
            and np.array_equal(self.entries, other.entries)
        )

    @property
    def user_size(self) -> int:
        return len(self.entries)

    def is_identity(self) -> bool:
        return (
            self.user_size == self.delta_size
            and bool(np.array_equal(self.entries, np.arange(self.delta_size)))
        )

    @cached_property
    def _gather_index(self) -> torch.Tensor:
        # unmapped entries read the padding column
        index = torch.tensor(self.entries, dtype=torch.long)
        index[index == UNMAPPED] = self.delta_size
        return index

    def check_vocabs(self, user_vocab: Vocabulary, delta_vocab: Vocabulary) -> None:
        if self.user_size != len(user_vocab) or self.delta_size != len(delta_vocab):
            raise MappingError(
                f"Mapping is {self.user_size} -> {self.delta_size} tokens,"
                f" vocabularies are {len(user_vocab)} -> {len(delta_vocab)}")
        for side, tag, vocab in (('user', self.user_tag, user_vocab), ('delta', self.delta_tag, delta_vocab)):
            if tag is not None and tag != vocab.tag:
                raise MappingError(f"Mapping was built for {side} vocabulary {tag}, got {vocab.tag}")

# region Building

def _specials_map(user_vocab: Vocabulary, delta_vocab: Vocabulary) -> dict[int, int]:
    return dict(zip(user_vocab.specials, delta_vocab.specials))

def build_mapping(user_vocab: Vocabulary, delta_vocab: Vocabulary, strategy: MappingStrategy) -> TokenMapping:
    '''
    Map every user token into the delta vocabulary.
    Special tokens are wired to their counterparts, never matched as strings.

    >>> user = Vocabulary.from_content(["ab", "a"])
    >>> delta = Vocabulary.from_content(["a", "abc"])
    >>> m = build_mapping(user, delta, MappingStrategy.PM_MINED)
    >>> [delta.tokens[i] for i in m.entries[4:]]
    ['abc', 'a']
    >>> m.stats
    MappingStats(exact=1, prefix_matched=1, nearest=0, unmapped=0, specials=4)
    '''
    index = DeltaIndex(delta_vocab)
    specials = _specials_map(user_vocab, delta_vocab)

    entries = np.full(len(user_vocab), UNMAPPED, dtype=np.int64)
    counts = dict.fromkeys(MappingStats._fields, 0)
    for user_id, token in enumerate(user_vocab.tokens):
        if user_id in specials:
            entries[user_id] = specials[user_id]
            counts['specials'] += 1
            continue
        delta_id, kind = match_token_detailed(token, delta_vocab, strategy, index)
        entries[user_id] = delta_id
        match kind:
            case MatchKind.EXACT:
                counts['exact'] += 1
            case MatchKind.PREFIX:
                counts['prefix_matched'] += 1
            case MatchKind.NEAREST:
                counts['nearest'] += 1
            case MatchKind.UNMAPPED:
                counts['unmapped'] += 1

    stats = MappingStats(**counts)
    logger.info(
        f"Built {strategy.value} mapping {user_vocab.tag} -> {delta_vocab.tag}: "
        + ", ".join(f"{k} {v}" for k, v in stats._asdict().items()))
    return TokenMapping(
        strategy=strategy,
        entries=entries,
        delta_size=len(delta_vocab),
        user_tag=user_vocab.tag,
        delta_tag=delta_vocab.tag,
        stats=stats,
    )

def identity_mapping(vocab: Vocabulary) -> TokenMapping:
    return build_mapping(vocab, vocab, MappingStrategy.EXACT)

# endregion Building

def scatter_logits(delta_logits: torch.Tensor, m: TokenMapping) -> torch.Tensor:
    '''
    Gather delta logits into user-vocabulary space along the last dimension.
    Unmapped user tokens receive 0.0. Linear and differentiable.

    >>> m = TokenMapping(MappingStrategy.MINED, np.array([1, UNMAPPED, 0]), delta_size=2)
    >>> scatter_logits(torch.tensor([1.0, -2.0]), m).tolist()
    [-2.0, 0.0, 1.0]
    '''
    if delta_logits.shape[-1] != m.delta_size:
        raise MappingError(
            f"Delta logits have {delta_logits.shape[-1]} entries,"
            f" mapping expects {m.delta_size}")
    padding = delta_logits.new_zeros((*delta_logits.shape[:-1], 1))
    padded = torch.cat([delta_logits, padding], dim=-1)
    return padded.index_select(-1, m._gather_index.to(delta_logits.device))
