import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.model import TinyTransformer, init_model, load_checkpoint, save_checkpoint
from cross_model_control.run_config import RunConfig
from cross_model_control.train import (
    TrainResult,
    finetune,
    read_forget_retain,
    read_supervised,
    train_delta,
    train_delta_unlearn,
)
from cross_model_control.vocab import Tokenizer
from .base import Task, write_epoch_log

logger = logging.getLogger(__name__)

class _TrainingTask(Task):
    '''
    Common tail of every training task: the final model as
    `<stem>.ckpt`, any `save_epochs` snapshots as `<stem>_epoch<n>.ckpt`,
    and the per-epoch losses in `metrics.log`.
    '''
    stem: ClassVar[str]

    def __init__(self, cfg: RunConfig):
        super().__init__(cfg)
        self._snapshots = list[Path]()

    def on_epoch(self, epoch: int, model: TinyTransformer) -> None:
        if epoch in self.cfg.save_epochs:
            path = self.out(f"{self.stem}_epoch{epoch}.ckpt")
            save_checkpoint(model, path)
            self._snapshots.append(path)

    def finish(self, result: TrainResult) -> list[Path]:
        final = self.out(f"{self.stem}.ckpt")
        save_checkpoint(result.model, final)
        log_path = write_epoch_log(result.log, self.out('metrics.log'))
        return [final, *self._snapshots, log_path]

    def fresh_delta(self, tok: Tokenizer) -> TinyTransformer:
        if self.cfg.delta:
            return load_checkpoint(self.cfg.delta[0])
        return init_model(self.model_config(len(tok.vocab), 'delta'), tok.vocab.tag)

class PretrainTask(_TrainingTask):
    ''' A fresh model of the configured shape trained on `data`. '''
    name = 'pretrain'
    stem = 'model'

    def execute(self) -> list[Path]:
        tok = self.tokenizer()
        self.cfg.require('data')
        model = init_model(self.model_config(len(tok.vocab), 'base'), tok.vocab.tag)
        result = finetune(
            model, read_supervised(cast(Path, self.cfg.data)), tok, self.train_config(),
            on_epoch=self.on_epoch, progress=self.cfg.progress)
        return self.finish(result)

class FinetuneTask(_TrainingTask):
    name = 'finetune'
    stem = 'model'

    def execute(self) -> list[Path]:
        tok = self.tokenizer()
        self.cfg.require('data')
        result = finetune(
            self.checkpoint('model'), read_supervised(cast(Path, self.cfg.data)), tok, self.train_config(),
            on_epoch=self.on_epoch, progress=self.cfg.progress)
        return self.finish(result)

class TrainDeltaTask(_TrainingTask):
    ''' A delta trained against the frozen `model` (the template). '''
    name = 'train-delta'
    stem = 'delta'

    def execute(self) -> list[Path]:
        tok = self.tokenizer()
        self.cfg.require('data')
        template = self.checkpoint('model').freeze()
        result = train_delta(
            template, self.fresh_delta(tok), read_supervised(cast(Path, self.cfg.data)), tok,
            self.train_config(), self.cfg.logsoftmax_on_base,
            on_epoch=self.on_epoch, progress=self.cfg.progress)
        return self.finish(result)

class UnlearnDeltaTask(_TrainingTask):
    ''' A delta trained to make the frozen `model` forget the forget split of `data`. '''
    name = 'unlearn-delta'
    stem = 'delta'

    def execute(self) -> list[Path]:
        tok = self.tokenizer()
        self.cfg.require('data')
        template = self.checkpoint('model').freeze()
        result = train_delta_unlearn(
            template, self.fresh_delta(tok), read_forget_retain(cast(Path, self.cfg.data)), tok,
            self.train_config(), self.cfg.logsoftmax_on_base,
            on_epoch=self.on_epoch, progress=self.cfg.progress)
        return self.finish(result)
