import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from .base import TokenSequence, Vocabulary, VocabularyError
from .trie import TokenTrie


class TokenizerScheme(enum.Enum):
    CHAR = 'char'
    MERGE = 'merge'
    ''' Greedy longest match over a vocabulary grown by learned merges. '''

class PairEncoding(NamedTuple):
    seq: TokenSequence
    response_start: int
    '''
    Index in `seq` of the first token that belongs to the response.
    Row `response_start - 1` of the logits is the first row scoring
    a response token.
    '''

@dataclass(frozen=True)
class Tokenizer:
    '''
    Encode text by greedy longest match against the vocabulary.
    For the char scheme every content token is one character,
    so longest match degenerates to one token per character.

    >>> from cross_model_control.vocab.base import Vocabulary
    >>> tok = Tokenizer(Vocabulary.from_content(["a", "b", "ab"]), TokenizerScheme.MERGE, (("a", "b"),))
    >>> tok.encode("aba").ids
    (6, 4)
    >>> tok.decode(tok.encode("aba", add_bos=True))
    'aba'
    >>> tok.encode("a¤").ids
    (4, 3)
    '''
    vocab: Vocabulary
    scheme: TokenizerScheme
    merge_rules: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        if self.scheme is TokenizerScheme.CHAR:
            if self.merge_rules:
                raise VocabularyError("Char tokenizers carry no merge rules.")
            long_tokens = [
                self.vocab.tokens[i] for i in self.vocab.content_ids()
                if len(self.vocab.tokens[i]) != 1
            ]
            if long_tokens:
                raise VocabularyError(f"Char vocabulary holds multi-character tokens: {long_tokens[:5]}")

    @cached_property
    def _trie(self) -> TokenTrie:
        return TokenTrie({
            self.vocab.tokens[i]: i
            for i in self.vocab.content_ids()
        })

    @property
    def max_token_len(self) -> int:
        return self._trie.max_token_len

    def encode_with_offsets(self, s: str) -> tuple[list[int], list[tuple[int, int]]]:
        '''
        Returns:
            Token ids and the (start, end) character span of each.
            Unknown characters become UNK spanning one character.
        '''
        ids = list[int]()
        spans = list[tuple[int, int]]()
        cursor = 0
        while cursor < len(s):
            token_id, length = self._trie.longest_match(s, cursor)
            if length == 0:
                token_id, length = self.vocab.specials.unk, 1
            ids.append(token_id)
            spans.append((cursor, cursor + length))
            cursor += length
        return ids, spans

    def encode(self, s: str, *, add_bos: bool = False, add_eos: bool = False) -> TokenSequence:
        ids, _ = self.encode_with_offsets(s)
        if add_bos:
            ids.insert(0, self.vocab.specials.bos)
        if add_eos:
            ids.append(self.vocab.specials.eos)
        return TokenSequence(tuple(ids), self.vocab.tag)

    def encode_pair(self, prompt: str, response: str, *, add_eos: bool = True) -> PairEncoding:
        '''
        Encode `prompt + response` as one text (so the boundary is
        tokenized exactly as it is at generation time) behind a BOS.
        A token straddling the boundary counts as response.
        '''
        ids, spans = self.encode_with_offsets(prompt + response)
        boundary = len(prompt)
        response_start = next(
            (i for i, (_, end) in enumerate(spans) if end > boundary),
            len(ids)
        )
        full = [self.vocab.specials.bos, *ids]
        if add_eos:
            full.append(self.vocab.specials.eos)
        return PairEncoding(TokenSequence(tuple(full), self.vocab.tag), response_start + 1)

    def token_text(self, token_id: int) -> str:
        ''' Text a token contributes to decoded output ('' for specials). '''
        if self.vocab.is_special(token_id):
            return ''
        return self.vocab.tokens[token_id]

    def decode(self, seq: TokenSequence) -> str:
        seq.check_against(self.vocab)
        return ''.join(self.token_text(i) for i in seq.ids)