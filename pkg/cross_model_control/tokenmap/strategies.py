import enum
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.vocab import TokenTrie, Vocabulary
from .edit_distance import edit_distance

UNMAPPED: Final = -1

class MappingStrategy(enum.Enum):
    EXACT = 'exact'
    MINED = 'mined'
    ''' Minimum edit distance over the whole delta vocabulary. '''
    PM_MINED = 'pm-mined'
    ''' Prefix match, then minimum edit distance among the candidates. '''

class MatchKind(enum.Enum):
    EXACT = 'exact'
    PREFIX = 'prefix'
    NEAREST = 'nearest'
    UNMAPPED = 'unmapped'

class DeltaIndex:
    '''
    Lookup structures over the content tokens of a delta vocabulary,
    built once per mapping.
    '''
    def __init__(self, delta_vocab: Vocabulary):
        self.vocab = delta_vocab
        self.content_ids: Final = list(delta_vocab.content_ids())
        self.trie: Final = TokenTrie({delta_vocab.tokens[i]: i for i in self.content_ids})

    def exact(self, tok: str) -> int | None:
        delta_id = self.vocab.id_of.get(tok)
        if delta_id is None or self.vocab.is_special(delta_id):
            return None
        return delta_id

def prefix_candidates(tok: str, delta_vocab: Vocabulary, index: DeltaIndex | None = None) -> set[int]:
    '''
    Delta tokens `d` such that `tok` is a prefix of `d` or `d` is a prefix of `tok`.
    Special tokens never qualify.

    >>> v = Vocabulary.from_content(["ultimately", "ult", "ul", "u", "estimate", "late"])
    >>> sorted(v.tokens[i] for i in prefix_candidates("ultimate", v))
    ['u', 'ul', 'ult', 'ultimately']
    '''
    assert tok, "Cannot match an empty token."
    index = index or DeltaIndex(delta_vocab)
    return {*index.trie.prefixes_of(tok), *index.trie.extensions_of(tok)}

def prefix_candidates_naive(tok: str, delta_vocab: Vocabulary) -> set[int]:
    ''' Linear scan with the same contract as `prefix_candidates`. '''
    assert tok, "Cannot match an empty token."
    return {
        i for i in delta_vocab.content_ids()
        if delta_vocab.tokens[i].startswith(tok) or tok.startswith(delta_vocab.tokens[i])
    }

def closest(tok: str, candidates: Iterable[int], delta_vocab: Vocabulary) -> tuple[int, int | None]:
    '''
    Minimum edit distance; ties go to the longer candidate,
    then to the lexicographically smaller one.

    Returns:
        (delta id or UNMAPPED, its distance or None)
    '''
    best_key: tuple[int, int, str] | None = None
    best_id = UNMAPPED
    for delta_id in candidates:
        candidate = delta_vocab.tokens[delta_id]
        # the length gap is a lower bound on the distance
        if best_key is not None and abs(len(candidate) - len(tok)) > best_key[0]:
            continue
        key = (edit_distance(tok, candidate), -len(candidate), candidate)
        if best_key is None or key < best_key:
            best_key, best_id = key, delta_id
    return best_id, (best_key[0] if best_key is not None else None)

def match_token_detailed(
        tok: str,
        delta_vocab: Vocabulary,
        strategy: MappingStrategy,
        index: DeltaIndex | None = None,
) -> tuple[int, MatchKind]:
    assert tok, "Cannot match an empty token."
    index = index or DeltaIndex(delta_vocab)

    exact_id = index.exact(tok)
    if exact_id is not None:
        return exact_id, MatchKind.EXACT

    match strategy:
        case MappingStrategy.EXACT:
            return UNMAPPED, MatchKind.UNMAPPED
        case MappingStrategy.MINED:
            delta_id, _ = closest(tok, index.content_ids, delta_vocab)
            kind = MatchKind.NEAREST
        case MappingStrategy.PM_MINED:
            candidates = prefix_candidates(tok, delta_vocab, index)
            # sorted so that the scan order, and so the pruning, is reproducible
            delta_id, _ = closest(tok, sorted(candidates), delta_vocab)
            kind = MatchKind.PREFIX

    if delta_id == UNMAPPED:
        return UNMAPPED, MatchKind.UNMAPPED
    return delta_id, kind

def match_token(
        tok: str,
        delta_vocab: Vocabulary,
        strategy: MappingStrategy,
        index: DeltaIndex | None = None,
) -> int:
    '''
    >>> v = Vocabulary.from_content(["ultimately", "ult", "ul", "u", "estimate", "late"])
    >>> v.tokens[match_token("ultimate", v, MappingStrategy.PM_MINED)]
    'ultimately'
    >>> w = Vocabulary.from_content(["estimate"])
    >>> w.tokens[match_token("ultimate", w, MappingStrategy.MINED)]
    'estimate'
    >>> match_token("ultimate", w, MappingStrategy.PM_MINED)
    -1
    '''
    delta_id, _ = match_token_detailed(tok, delta_vocab, strategy, index)
    return delta_id
