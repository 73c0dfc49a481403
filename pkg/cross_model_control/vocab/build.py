import logging
from collections import Counter
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from .base import SPECIAL_TOKENS, Vocabulary, VocabularyError
from .tokenizer import Tokenizer, TokenizerScheme

logger = logging.getLogger(__name__)

type Segmented = list[str | None]
''' A corpus line split into current tokens; None marks an uncovered character. '''

def _corpus_lines(corpus: Iterable[str]) -> list[str]:
    lines = [
        part
        for chunk in corpus
        for part in chunk.split('\n')
        if part
    ]
    if not lines:
        raise VocabularyError("empty corpus")
    return lines

def _char_inventory(lines: Sequence[str], room: int) -> list[str]:
    '''
    The `room` most frequent characters (ties by code point).
    Rarer characters are left to UNK.

    >>> _char_inventory(["abab", "c"], 2)
    ['a', 'b']
    '''
    counts = Counter(char for line in lines for char in line)
    ranked = sorted(counts, key=lambda c: (-counts[c], c))
    if len(ranked) > room:
        logger.warning(f"{len(ranked) - room} rare characters dropped from the inventory (target size too small).")
    return ranked[:room]

def _count_pairs(segmented: Iterable[Segmented]) -> Counter[tuple[str, str]]:
    pairs = Counter[tuple[str, str]]()
    for pieces in segmented:
        for left, right in zip(pieces, pieces[1:]):
            if left is not None and right is not None:
                pairs[left, right] += 1
    return pairs

def _apply_merge(pieces: Segmented, left: str, right: str) -> Segmented:
    '''
    >>> _apply_merge(['a', 'b', 'a', 'b', None], 'a', 'b')
    ['ab', 'ab', None]
    '''
    merged: Segmented = []
    i = 0
    while i < len(pieces):
        if i + 1 < len(pieces) and pieces[i] == left and pieces[i + 1] == right:
            merged.append(left + right)
            i += 2
        else:
            merged.append(pieces[i])
            i += 1
    return merged

def learn_merges(
        lines: Sequence[str],
        alphabet: Collection[str],
        budget: int,
        *,
        min_pair_count: int = 2,
) -> tuple[list[str], list[tuple[str, str]]]:
    '''
    Merge the most frequent adjacent pair (ties: lexicographically
    smallest concatenation, then smallest left part) until `budget`
    new tokens exist or no pair occurs `min_pair_count` times.

    Returns:
        (new tokens in creation order, merge rules in application order)

    >>> learn_merges(["abab"], {"a", "b"}, 1)
    (['ab'], [('a', 'b')])
    '''
    segmented: list[Segmented] = [
        [char if char in alphabet else None for char in line]
        for line in lines
    ]
    known = set(alphabet)
    new_tokens = list[str]()
    rules = list[tuple[str, str]]()

    while len(new_tokens) < budget:
        pairs = _count_pairs(segmented)
        if not pairs:
            break
        (left, right), count = min(
            pairs.items(),
            key=lambda item: (-item[1], item[0][0] + item[0][1], item[0][0])
        )
        if count < min_pair_count:
            break
        rules.append((left, right))
        if left + right not in known:
            known.add(left + right)
            new_tokens.append(left + right)
        segmented = [_apply_merge(pieces, left, right) for pieces in segmented]

    logger.info(f"Learned {len(rules)} merges ({len(new_tokens)} new tokens).")
    return new_tokens, rules

def build_vocab(
        corpus: Iterable[str],
        scheme: TokenizerScheme,
        target_size: int,
        *,
        min_pair_count: int = 2,
) -> Tokenizer:
    '''
    Build a tokenizer whose vocabulary holds at most `target_size`
    tokens, the four specials included.

    >>> tok = build_vocab(["abab"], TokenizerScheme.CHAR, 10)
    >>> tok.vocab.tokens[4:]
    ('a', 'b')
    >>> build_vocab(["abab"], TokenizerScheme.MERGE, 7).vocab.tokens[4:]
    ('a', 'b', 'ab')
    '''
    if target_size < len(SPECIAL_TOKENS) + 1:
        raise VocabularyError(f"target_size must be at least {len(SPECIAL_TOKENS) + 1}, got {target_size}")
    lines = _corpus_lines(corpus)

    room = target_size - len(SPECIAL_TOKENS)
    alphabet = _char_inventory(lines, room)

    match scheme:
        case TokenizerScheme.CHAR:
            vocab = Vocabulary.from_content(alphabet)
            return Tokenizer(vocab, scheme)
        case TokenizerScheme.MERGE:
            new_tokens, rules = learn_merges(
                lines, set(alphabet), room - len(alphabet),
                min_pair_count=min_pair_count)
            vocab = Vocabulary.from_content([*alphabet, *new_tokens])
            return Tokenizer(vocab, scheme, tuple(rules))
