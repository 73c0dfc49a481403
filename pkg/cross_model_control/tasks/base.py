import dataclasses
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.compose import CompositionMode, CompositionSpec
from cross_model_control.decode import GenerationSpec, SteeredSession
from cross_model_control.model import ModelConfig, TinyTransformer, load_checkpoint
from cross_model_control.run_config import Manifest, RunConfig
from cross_model_control.tokenmap import TokenMapping, identity_mapping, load_mapping
from cross_model_control.train import EpochLog, TrainConfig
from cross_model_control.util.custom_types import ConfigError
from cross_model_control.vocab import Tokenizer, load_tokenizer

logger = logging.getLogger(__name__)

class Task(ABC):
    '''
    One subcommand. Reads everything it needs from a `RunConfig`,
    writes its artifacts under `cfg.out_dir`, and lists them so the
    run manifest can checksum them.
    '''
    name: ClassVar[str]

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.manifest = Manifest(cfg)

    @abstractmethod
    def execute(self) -> list[Path]:
        ''' Do the work. Returns the artifact paths written. '''
        ...

    def run(self) -> Path:
        ''' Execute, then write the manifest. Returns the manifest path. '''
        self.cfg.out_dir.mkdir(parents=True, exist_ok=True)
        torch.manual_seed(self.cfg.seed)
        logger.info(f"Running {self.name} into {self.cfg.out_dir}")
        self.manifest.add(*self.execute())
        return self.manifest.write()

    # region Shared builders

    def out(self, filename: str) -> Path:
        return self.cfg.out_dir / filename

    def tokenizer(self, key: str = 'vocab') -> Tokenizer:
        self.cfg.require(key)
        return load_tokenizer(cast(Path, getattr(self.cfg, key)))

    def checkpoint(self, key: str = 'model') -> TinyTransformer:
        self.cfg.require(key)
        return load_checkpoint(cast(Path, getattr(self.cfg, key)))

    def model_config(self, vocab_size: int, default_arch: str) -> ModelConfig:
        ''' Preset shape, with any explicitly set dimension overriding it. '''
        cfg = self.cfg
        match cfg.arch or default_arch:
            case 'base':
                preset = ModelConfig.base_default(vocab_size, context_len=cfg.context_len, seed=cfg.seed)
            case 'delta':
                preset = ModelConfig.delta_default(vocab_size, context_len=cfg.context_len, seed=cfg.seed)
            case other:
                raise ConfigError(f"arch must be 'base' or 'delta', got {other!r}")
        overrides = {
            key: getattr(cfg, key)
            for key in ('d_model', 'n_layers', 'n_heads', 'd_ff')
            if getattr(cfg, key) is not None
        }
        return dataclasses.replace(preset, **overrides)

    def train_config(self) -> TrainConfig:
        cfg = self.cfg
        return TrainConfig(
            learning_rate=cfg.learning_rate,
            batch_size=cfg.batch_size,
            epochs=cfg.epochs,
            optimizer=cfg.optimizer,
            grad_clip=cfg.grad_clip,
            seed=cfg.seed,
            loss_mask=cfg.loss_mask,
            save_epochs=cfg.save_epochs,
        )

    def generation_spec(self) -> GenerationSpec:
        cfg = self.cfg
        return GenerationSpec(
            max_new_tokens=cfg.max_new_tokens,
            mode=cfg.decoding,
            temperature=cfg.temperature,
            top_k=cfg.top_k,
            seed=cfg.seed,
            stop=cfg.stop,
        )

    def session(self, delta_path: Path | None = None, alpha: float | None = None) -> SteeredSession:
        '''
        User model and tokenizer from `model`/`vocab`; delta model from
        `delta_path` (default: the first `delta`) over `delta_vocab`
        (default: `vocab`), joined through `mapping` when the two
        vocabularies differ.
        '''
        cfg = self.cfg
        user_tok = self.tokenizer('vocab')
        user_model = self.checkpoint('model')
        if cfg.mode is CompositionMode.NONE:
            spec = CompositionSpec(CompositionMode.NONE, logsoftmax_on_base=cfg.logsoftmax_on_base)
            return SteeredSession(user_model, user_tok, None, None, spec)

        if delta_path is None:
            cfg.require('delta')
            delta_path = cfg.delta[0]
        delta_tok = self.tokenizer('delta_vocab') if cfg.delta_vocab is not None else user_tok
        mapping: TokenMapping | None = None
        if cfg.mapping is not None:
            mapping = load_mapping(cfg.mapping, user_tok.vocab, delta_tok.vocab)
        elif cfg.mode is CompositionMode.CMC and delta_tok.vocab.tag != user_tok.vocab.tag:
            raise ConfigError("cmc mode across vocabularies needs --mapping")
        elif cfg.mode is CompositionMode.CMC:
            mapping = identity_mapping(user_tok.vocab)

        spec = CompositionSpec(
            mode=cfg.mode,
            alpha=cfg.alpha if alpha is None else alpha,
            logsoftmax_on_base=cfg.logsoftmax_on_base,
            mapping=mapping,
        )
        antiexpert = self.checkpoint('antiexpert') if cfg.mode is CompositionMode.PROXY else None
        return SteeredSession(
            user_model, user_tok,
            load_checkpoint(delta_path), delta_tok,
            spec,
            antiexpert_model=antiexpert,
            incremental=cfg.incremental,
        )

    # endregion Shared builders

def write_epoch_log(log: Sequence[EpochLog], path: Path) -> Path:
    path.write_text(''.join(entry.line() + "\n" for entry in log), encoding='utf-8')
    return path
