import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd

from cross_model_control.synthetic import (
    SyntheticTaskSpec,
    TaskKind,
    gen_forget_retain,
    gen_instruction_data,
)
from cross_model_control.train import write_forget_retain, write_supervised
from cross_model_control.util.custom_types import DataError
from cross_model_control.vocab import TokenizerScheme, build_vocab, save_tokenizer
from cross_model_control.vocab.files import merges_path_for
from .base import Task

logger = logging.getLogger(__name__)

class GenDataTask(Task):
    ''' Writes one synthetic corpus as `<kind>.jsonl` (`<kind>-plain.jsonl` without the answer format). '''
    name = 'gen-data'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        spec = SyntheticTaskSpec(
            kind=cfg.kind,
            size=cfg.size,
            seed=cfg.seed,
            forget_fraction=cfg.forget_fraction,
            holdout_fraction=cfg.holdout_fraction,
        )
        suffix = '-plain' if cfg.plain else ''
        path = self.out(f"{cfg.kind.value}{suffix}.jsonl")
        match cfg.kind:
            case TaskKind.FORGET_RETAIN_FACTS:
                write_forget_retain(gen_forget_retain(spec), path)
            case TaskKind.INSTRUCTION_FORMAT | TaskKind.CROSS_TASK_CONTROL:
                write_supervised(gen_instruction_data(spec, with_marker=not cfg.plain), path)
        logger.info(f"Wrote {cfg.size} {cfg.kind.value} examples to {path}")
        return [path]

def corpus_texts(path: Path) -> list[str]:
    '''
    Every string cell of a JSON-lines corpus (list cells included),
    or the lines of any other text file.
    '''
    if path.suffix != '.jsonl':
        return path.read_text(encoding='utf-8').splitlines()
    try:
        df = pd.read_json(path, lines=True, dtype=False, encoding='utf-8')
    except ValueError as e:
        raise DataError(f"{path}: not a JSON-lines corpus ({e})")

    texts = list[str]()
    for column in df.columns:
        for cell in df[column]:
            match cell:
                case str():
                    texts.append(cell)
                case list():
                    texts.extend(item for item in cell if isinstance(item, str))
    return texts

class BuildVocabTask(Task):
    name = 'build-vocab'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        cfg.require('corpus')
        texts = [text for path in cfg.corpus for text in corpus_texts(path)]
        tok = build_vocab(texts, cfg.scheme, cfg.vocab_size)

        vocab_path = self.out('vocab.txt')
        save_tokenizer(tok, vocab_path)
        written = [vocab_path]
        if tok.scheme is TokenizerScheme.MERGE:
            written.append(merges_path_for(vocab_path))
        logger.info(f"Vocabulary {tok.vocab.tag}: {len(tok.vocab)} tokens")
        return written
