import hashlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.util.custom_types import DataError

SPECIAL_TOKENS: Final = ('<bos>', '<eos>', '<pad>', '<unk>')
''' Fixed first four lines of every vocabulary file, in id order. '''

class VocabularyError(DataError):
    pass

class Specials(NamedTuple):
    bos: int = 0
    eos: int = 1
    pad: int = 2
    unk: int = 3

@dataclass(frozen=True)
class Vocabulary:
    '''
    Token string <-> id bijection.

    >>> v = Vocabulary.from_content(["a", "b"])
    >>> len(v), v.id_of["b"], v.tokens[:2]
    (6, 5, ('<bos>', '<eos>'))
    >>> Vocabulary.from_content(["a", "a"])
    Traceback (most recent call last):
        ...
    cross_model_control.vocab.base.VocabularyError: Duplicate token: 'a'
    '''
    tokens: tuple[str, ...]
    specials: Specials = Specials()

    id_of: Mapping[str, int] = field(init=False, repr=False, compare=False)
    tag: str = field(init=False, compare=False)
    ''' Short content hash identifying this vocabulary. '''

    def __post_init__(self):
        id_of = dict[str, int]()
        for i, token in enumerate(self.tokens):
            if not token:
                raise VocabularyError(f"Empty token at id {i}.")
            if '\n' in token:
                raise VocabularyError(f"Token with newline at id {i}: {token!r}")
            if token in id_of:
                raise VocabularyError(f"Duplicate token: {token!r}")
            id_of[token] = i

        if len(set(self.specials)) != len(SPECIAL_TOKENS):
            raise VocabularyError(f"Special ids are not distinct: {self.specials}")
        for special_id, special_token in zip(self.specials, SPECIAL_TOKENS):
            if not 0 <= special_id < len(self.tokens) or self.tokens[special_id] != special_token:
                raise VocabularyError(f"Special token {special_token} missing at id {special_id}.")
        if len(self.tokens) < len(SPECIAL_TOKENS) + 1:
            raise VocabularyError("Vocabulary needs at least one content token.")

        digest = hashlib.sha256('\n'.join(self.tokens).encode('utf-8')).hexdigest()
        object.__setattr__(self, 'id_of', MappingProxyType(id_of))
        object.__setattr__(self, 'tag', f"v{len(self.tokens)}-{digest[:12]}")

    @classmethod
    def from_content(cls, content_tokens: Iterable[str]) -> Self:
        ''' Prepend the four special tokens to `content_tokens`. '''
        return cls(tokens=(*SPECIAL_TOKENS, *content_tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.id_of

    def is_special(self, token_id: int) -> bool:
        return token_id in self.specials

    def content_ids(self) -> range | list[int]:
        if self.specials == Specials():
            return range(len(SPECIAL_TOKENS), len(self.tokens))
        return [i for i in range(len(self.tokens)) if not self.is_special(i)]

@dataclass(frozen=True)
class TokenSequence:
    '''
    Ids tagged with the vocabulary they index.
    '''
    ids: tuple[int, ...]
    vocab_tag: str

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, item: slice) -> 'TokenSequence':
        return TokenSequence(self.ids[item], self.vocab_tag)

    def check_against(self, vocab: Vocabulary) -> None:
        if self.vocab_tag != vocab.tag:
            raise VocabularyError(
                f"vocabulary mismatch: sequence tagged {self.vocab_tag},"
                f" vocabulary is {vocab.tag}")
        bad = [i for i in self.ids if not 0 <= i < len(vocab)]
        if bad:
            raise VocabularyError(f"Ids out of range for {vocab.tag}: {bad[:5]}")

    def as_tensor(self) -> torch.Tensor:
        return torch.tensor(self.ids, dtype=torch.long)
