'''
Mapping file: a header line `cmc-map v1 <strategy> <|V_user|> <|V_delta|>`,
then one `<user_id> <delta_id|-1>` line per user token, in id order.
'''
import enum
import json
import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import numpy as np
import pandas as pd
import pandera.pandas as pa
from pandera.typing import DataFrame

from cross_model_control.util.custom_types import MappingReportRows
from cross_model_control.vocab import SPECIAL_TOKENS, Vocabulary, VocabularyError
from .edit_distance import edit_distance
from .mapping import MappingError, TokenMapping, compute_stats
from .strategies import UNMAPPED, MappingStrategy

logger = logging.getLogger(__name__)

MAGIC: Final = 'cmc-map'
VERSION: Final = 'v1'

def save_mapping(m: TokenMapping, path: Path) -> None:
    lines = [f"{MAGIC} {VERSION} {m.strategy.value} {m.user_size} {m.delta_size}"]
    lines.extend(f"{user_id} {delta_id}" for user_id, delta_id in enumerate(m.entries.tolist()))
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    logger.info(f"Saved mapping ({m.user_size} -> {m.delta_size}) to {path}")

def load_mapping(path: Path, user_vocab: Vocabulary, delta_vocab: Vocabulary) -> TokenMapping:
    '''
    Read a mapping file and check it against the two vocabularies
    it is about to be used with.
    '''
    lines = path.read_text(encoding='utf-8').splitlines()
    if not lines:
        raise MappingError(f"{path}: empty mapping file")

    header = lines[0].split(' ')
    match header:
        case [magic, version, strategy_name, user_size, delta_size] if magic == MAGIC:
            if version != VERSION:
                raise MappingError(f"{path}: unsupported mapping version {version}")
            try:
                strategy = MappingStrategy(strategy_name)
            except ValueError:
                raise MappingError(f"{path}: unknown strategy {strategy_name!r}")
            user_size, delta_size = int(user_size), int(delta_size)
        case _:
            raise MappingError(f"{path}: bad header {lines[0]!r}")

    body = lines[1:]
    if len(body) != user_size:
        raise MappingError(f"{path}: header declares {user_size} entries, file has {len(body)}")
    entries = np.empty(user_size, dtype=np.int64)
    for line_no, line in enumerate(body, start=2):
        try:
            user_id, delta_id = (int(field) for field in line.split(' '))
        except ValueError:
            raise MappingError(f"{path}:{line_no}: expected `<user_id> <delta_id>`, got {line!r}")
        if user_id != line_no - 2:
            raise MappingError(f"{path}:{line_no}: entries out of order (user id {user_id})")
        entries[user_id] = delta_id

    m = TokenMapping(strategy, entries, delta_size)
    m.check_vocabs(user_vocab, delta_vocab)
    for user_special, delta_special in zip(user_vocab.specials, delta_vocab.specials):
        if entries[user_special] != delta_special:
            raise MappingError(f"{path}: special token {user_vocab.tokens[user_special]} is not mapped to its counterpart")

    return TokenMapping(
        strategy=strategy,
        entries=entries,
        delta_size=delta_size,
        user_tag=user_vocab.tag,
        delta_tag=delta_vocab.tag,
        stats=compute_stats(entries, strategy, user_vocab, delta_vocab),
    )

# region Foreign vocabularies

class VocabFormat(enum.Enum):
    PLAIN = 'plain'
    ''' One token per line. '''
    HF_JSON = 'hf-json'
    ''' A `tokenizer.json` (or bare `vocab.json`) token -> id object. '''

def _hf_tokens(path: Path) -> list[str]:
    with open(path, encoding='utf-8') as f:
        data = json.load(f)
    match data:
        case {'model': {'vocab': dict() as vocab}}:
            pass
        case dict() as vocab if all(isinstance(v, int) for v in vocab.values()):
            pass
        case _:
            raise VocabularyError(f"{path}: no token -> id table found")
    return [token for token, _ in sorted(vocab.items(), key=lambda item: item[1])]

def load_foreign_vocab(path: Path, fmt: VocabFormat, strip_prefix: str | None = None) -> Vocabulary:
    '''
    Load a vocabulary from another tokenizer, for mapping only.

    Tokens are optionally stripped of a leading marker (e.g. "▁"),
    then empty, multi-line and duplicate tokens are dropped
    and our own special tokens are prepended.
    '''
    match fmt:
        case VocabFormat.PLAIN:
            raw = path.read_text(encoding='utf-8').splitlines()
        case VocabFormat.HF_JSON:
            raw = _hf_tokens(path)

    seen = set(SPECIAL_TOKENS)
    content = list[str]()
    for token in raw:
        if strip_prefix and token.startswith(strip_prefix):
            token = token[len(strip_prefix):]
        if not token or '\n' in token or token in seen:
            continue
        seen.add(token)
        content.append(token)

    dropped = len(raw) - len(content)
    if dropped:
        logger.info(f"{path}: dropped {dropped} empty or duplicate tokens")
    return Vocabulary.from_content(content)

# endregion Foreign vocabularies

@pa.check_types
def mapping_report(
        m: TokenMapping,
        user_vocab: Vocabulary,
        delta_vocab: Vocabulary,
        top: int = 20,
) -> DataFrame[MappingReportRows]:
    ''' The `top` mapped content tokens with the largest edit distance to their target. '''
    m.check_vocabs(user_vocab, delta_vocab)
    rows = [
        {
            'user_id': user_id,
            'user_token': user_vocab.tokens[user_id],
            'delta_id': delta_id,
            'delta_token': delta_vocab.tokens[delta_id],
            'distance': float(edit_distance(user_vocab.tokens[user_id], delta_vocab.tokens[delta_id])),
        }
        for user_id, delta_id in enumerate(m.entries.tolist())
        if delta_id != UNMAPPED and not user_vocab.is_special(user_id)
    ]
    df = pd.DataFrame(rows, columns=list(MappingReportRows.to_schema().columns))
    df = df.astype({'user_id': int, 'delta_id': int, 'distance': float, 'user_token': str})
    df = df.sort_values(['distance', 'user_id'], ascending=[False, True], kind='stable').head(top)
    return DataFrame[MappingReportRows](df.reset_index(drop=True))
