from .base import SPECIAL_TOKENS, Specials, TokenSequence, Vocabulary, VocabularyError
from .build import build_vocab
from .files import load_tokenizer, load_vocab, save_tokenizer, save_vocab
from .tokenizer import PairEncoding, Tokenizer, TokenizerScheme
from .trie import TokenTrie

__all__ = [
    "SPECIAL_TOKENS",
    "Specials",
    "TokenSequence",
    "Vocabulary",
    "VocabularyError",
    "build_vocab",
    "load_tokenizer",
    "load_vocab",
    "save_tokenizer",
    "save_vocab",
    "PairEncoding",
    "Tokenizer",
    "TokenizerScheme",
    "TokenTrie",
]
