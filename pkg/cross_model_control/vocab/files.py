r'''
Vocabulary file: UTF-8, one token per line, line order = id order,
first four lines `<bos>`, `<eos>`, `<pad>`, `<unk>`.

Merge rules file: one `left right` pair per line in application order.
Tokens may contain spaces, so inside a merge line a space is written
as `\s` and a backslash as `\\`.
'''
import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from .base import SPECIAL_TOKENS, Vocabulary, VocabularyError
from .tokenizer import Tokenizer, TokenizerScheme

logger = logging.getLogger(__name__)

def _escape(token: str) -> str:
    return token.replace('\\', '\\\\').replace(' ', '\\s')

def _unescape(field: str) -> str:
    out = list[str]()
    chars = iter(field)
    for char in chars:
        if char != '\\':
            out.append(char)
            continue
        match next(chars, None):
            case 's':
                out.append(' ')
            case '\\':
                out.append('\\')
            case other:
                raise VocabularyError(f"Bad escape in merge rule: \\{other}")
    return ''.join(out)

def _read_lines(path: Path) -> list[str]:
    text = path.read_text(encoding='utf-8')
    lines = text.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    return lines

def save_vocab(vocab: Vocabulary, path: Path) -> None:
    path.write_text(''.join(f"{token}\n" for token in vocab.tokens), encoding='utf-8')

def load_vocab(path: Path) -> Vocabulary:
    lines = _read_lines(path)
    if tuple(lines[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
        raise VocabularyError(
            f"{path}: first lines must be {' '.join(SPECIAL_TOKENS)}, got {lines[:len(SPECIAL_TOKENS)]}")
    return Vocabulary(tuple(lines))

def save_merges(rules: Sequence[tuple[str, str]], path: Path) -> None:
    path.write_text(
        ''.join(f"{_escape(left)} {_escape(right)}\n" for left, right in rules),
        encoding='utf-8')

def load_merges(path: Path) -> tuple[tuple[str, str], ...]:
    rules = list[tuple[str, str]]()
    for line_no, line in enumerate(_read_lines(path), start=1):
        fields = line.split(' ')
        if len(fields) != 2:
            raise VocabularyError(f"{path}:{line_no}: expected `left right`, got {line!r}")
        rules.append((_unescape(fields[0]), _unescape(fields[1])))
    return tuple(rules)

def save_tokenizer(tok: Tokenizer, vocab_path: Path, merges_path: Path | None = None) -> None:
    save_vocab(tok.vocab, vocab_path)
    if tok.scheme is TokenizerScheme.MERGE:
        if merges_path is None:
            merges_path = merges_path_for(vocab_path)
        save_merges(tok.merge_rules, merges_path)
    logger.info(f"Saved {tok.scheme.value} tokenizer ({len(tok.vocab)} tokens) to {vocab_path}")

def load_tokenizer(vocab_path: Path, merges_path: Path | None = None) -> Tokenizer:
    '''
    The scheme is `merge` when a merge rules file exists (given, or
    next to the vocabulary as `<stem>.merges`), else `char`.
    '''
    vocab = load_vocab(vocab_path)
    if merges_path is None and merges_path_for(vocab_path).exists():
        merges_path = merges_path_for(vocab_path)
    if merges_path is None:
        return Tokenizer(vocab, TokenizerScheme.CHAR)
    return Tokenizer(vocab, TokenizerScheme.MERGE, load_merges(merges_path))

def merges_path_for(vocab_path: Path) -> Path:
    return vocab_path.with_suffix('.merges')
