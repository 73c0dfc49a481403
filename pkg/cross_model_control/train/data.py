'''
Corpora on disk are UTF-8 JSON lines, one record per line:
`prompt`, `response` for supervised pairs; `question`, `answer`,
`paraphrased_answer`, `perturbed_answers`, `split` for unlearning.
'''
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd
import pandera.errors
import pandera.pandas as pa
import torch
from pandera.typing import DataFrame

from cross_model_control.util.custom_types import DataError, QARecords, SupervisedRecords
from cross_model_control.util.funcs import chunked
from cross_model_control.vocab import PairEncoding, Tokenizer
from .config import LossMask

logger = logging.getLogger(__name__)

class SupervisedPair(NamedTuple):
    prompt: str
    response: str

class QARecord(NamedTuple):
    question: str
    answer: str
    paraphrased_answer: str
    perturbed_answers: tuple[str, ...]

ANSWER_SEPARATOR: Final = ' '

def qa_pair(question: str, answer: str) -> SupervisedPair:
    '''
    How a question and an answer are laid out as one text.

    >>> qa_pair("Where is Ulm?", "On the Danube.")
    SupervisedPair(prompt='Where is Ulm?', response=' On the Danube.')
    '''
    return SupervisedPair(question, ANSWER_SEPARATOR + answer)

@dataclass(frozen=True)
class ForgetRetainDataset:
    forget: tuple[QARecord, ...]
    retain: tuple[QARecord, ...]
    holdout: tuple[QARecord, ...] = field(default=())
    ''' Unrelated facts, never trained on by the delta. '''

    def __post_init__(self):
        splits = {'forget': self.forget, 'retain': self.retain, 'holdout': self.holdout}
        seen = dict[str, str]()
        for name, records in splits.items():
            for record in records:
                if record.question in seen:
                    raise DataError(
                        f"Question appears in both {seen[record.question]} and {name}: {record.question!r}")
                seen[record.question] = name
                if not record.perturbed_answers:
                    raise DataError(f"No perturbed answers for {record.question!r}")

    def split(self, name: str) -> tuple[QARecord, ...]:
        match name:
            case 'forget':
                return self.forget
            case 'retain':
                return self.retain
            case 'holdout':
                return self.holdout
            case _:
                raise DataError(f"Unknown split {name!r}")

# region Files

def _read_json_lines(path: Path) -> pd.DataFrame:
    try:
        return pd.read_json(path, lines=True, dtype=False, encoding='utf-8')
    except ValueError as e:
        raise DataError(f"{path}: not a JSON-lines corpus ({e})")

def read_supervised(path: Path) -> list[SupervisedPair]:
    df = _read_json_lines(path)
    try:
        df = SupervisedRecords.validate(df)
    except pandera.errors.SchemaError as e:
        raise DataError(f"{path}: {e}")
    pairs = [SupervisedPair(row.prompt, row.response) for row in df.itertuples(index=False)]
    logger.info(f"Read {len(pairs)} supervised pairs from {path}")
    return pairs

@pa.check_types
def supervised_frame(pairs: Sequence[SupervisedPair]) -> DataFrame[SupervisedRecords]:
    return DataFrame[SupervisedRecords](pd.DataFrame(pairs, columns=list(SupervisedPair._fields), dtype=str))

def write_supervised(pairs: Sequence[SupervisedPair], path: Path) -> None:
    supervised_frame(pairs).to_json(path, orient='records', lines=True, force_ascii=False)

def read_forget_retain(path: Path) -> ForgetRetainDataset:
    df = _read_json_lines(path)
    try:
        df = QARecords.validate(df)
    except pandera.errors.SchemaError as e:
        raise DataError(f"{path}: {e}")
    splits: dict[str, list[QARecord]] = {'forget': [], 'retain': [], 'holdout': []}
    for row in df.itertuples(index=False):
        splits[row.split].append(QARecord(
            row.question, row.answer, row.paraphrased_answer, tuple(row.perturbed_answers)))
    logger.info(f"Read {', '.join(f'{len(v)} {k}' for k, v in splits.items())} records from {path}")
    return ForgetRetainDataset(
        tuple(splits['forget']), tuple(splits['retain']), tuple(splits['holdout']))

@pa.check_types
def forget_retain_frame(data: ForgetRetainDataset) -> DataFrame[QARecords]:
    rows = [
        {**record._asdict(), 'perturbed_answers': list(record.perturbed_answers), 'split': name}
        for name in ('forget', 'retain', 'holdout')
        for record in data.split(name)
    ]
    return DataFrame[QARecords](pd.DataFrame(rows, columns=[*QARecord._fields, 'split']))

def write_forget_retain(data: ForgetRetainDataset, path: Path) -> None:
    forget_retain_frame(data).to_json(path, orient='records', lines=True, force_ascii=False)

# endregion Files
# region Batching

class Batch(NamedTuple):
    inputs: torch.Tensor
    ''' (B, T) ids, PAD-filled on the right. '''
    targets: torch.Tensor
    ''' (B, T) next-token ids; `targets[b, t] = full[b, t + 1]`. '''
    mask: torch.Tensor
    ''' (B, T) bool; True where the loss is taken. '''

def encode_pairs(tok: Tokenizer, pairs: Iterable[SupervisedPair]) -> list[PairEncoding]:
    return [tok.encode_pair(pair.prompt, pair.response) for pair in pairs]

def check_context(encodings: Sequence[PairEncoding], context_len: int) -> None:
    '''
    Reject records whose model input (every token but the last) does
    not fit the context window.

    >>> from cross_model_control.vocab import TokenSequence
    >>> check_context([PairEncoding(TokenSequence((0, 4, 5, 1), 't'), 2)], context_len=2)
    Traceback (most recent call last):
        ...
    cross_model_control.util.custom_types.DataError: record 0 is 4 tokens long, the context window holds 3 (2 inputs plus one target)
    '''
    for i, enc in enumerate(encodings):
        if len(enc.seq) - 1 > context_len:
            raise DataError(
                f"record {i} is {len(enc.seq)} tokens long, the context window holds"
                f" {context_len + 1} ({context_len} inputs plus one target)")

def collate(encodings: Sequence[PairEncoding], pad_id: int, loss_mask: LossMask) -> Batch:
    '''
    Pad to the longest sequence; PAD positions never count toward the loss.

    >>> from cross_model_control.vocab import TokenSequence
    >>> enc = [PairEncoding(TokenSequence((0, 4, 5, 1), 't'), 2), PairEncoding(TokenSequence((0, 4, 1), 't'), 2)]
    >>> b = collate(enc, pad_id=2, loss_mask=LossMask.RESPONSE_ONLY)
    >>> b.inputs.tolist(), b.mask.tolist()
    ([[0, 4, 5], [0, 4, 2]], [[False, True, True], [False, True, False]])
    '''
    assert encodings, "Cannot collate an empty batch."
    width = max(len(enc.seq) for enc in encodings) - 1
    inputs = torch.full((len(encodings), width), pad_id, dtype=torch.long)
    targets = torch.full((len(encodings), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(encodings), width), dtype=torch.bool)
    for row, enc in enumerate(encodings):
        ids = enc.seq.as_tensor()
        n = len(ids) - 1
        inputs[row, :n] = ids[:-1]
        targets[row, :n] = ids[1:]
        # row t scores token t + 1
        first = max(enc.response_start - 1, 0) if loss_mask is LossMask.RESPONSE_ONLY else 0
        mask[row, first:n] = True
    return Batch(inputs, targets, mask)

def make_batches(
        encodings: Sequence[PairEncoding],
        batch_size: int,
        pad_id: int,
        loss_mask: LossMask,
        generator: torch.Generator | None = None,
) -> list[Batch]:
    ''' Shuffled when a generator is given, else in input order. '''
    if generator is not None:
        order = torch.randperm(len(encodings), generator=generator).tolist()
        encodings = [encodings[i] for i in order]
    return [collate(chunk, pad_id, loss_mask) for chunk in chunked(encodings, batch_size)]

# endregion Batching
