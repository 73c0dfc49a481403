import enum
import math
from dataclasses import dataclass, field
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.util.custom_types import CmcError, ConfigError


class TrainingError(CmcError):
    pass

class OptimizerKind(enum.Enum):
    SGD = 'sgd'
    ADAM = 'adam'

class LossMask(enum.Enum):
    RESPONSE_ONLY = 'response_only'
    FULL_SEQUENCE = 'full_sequence'

@dataclass(frozen=True)
class TrainConfig:
    '''
    >>> TrainConfig(epochs=0)
    Traceback (most recent call last):
        ...
    cross_model_control.util.custom_types.ConfigError: epochs must be at least 1, got 0
    '''
    learning_rate: float = 3e-4
    batch_size: int = 8
    epochs: int = 1
    optimizer: OptimizerKind = OptimizerKind.ADAM
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    grad_clip: float | None = 1.0
    seed: int = 0
    loss_mask: LossMask = LossMask.RESPONSE_ONLY
    save_epochs: tuple[int, ...] = field(default=())
    ''' Epochs after which the trained model is also checkpointed. '''

    def __post_init__(self):
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be positive or unset, got {self.grad_clip}")
        if not all(0 <= b < 1 for b in self.betas):
            raise ConfigError(f"Adam betas must lie in [0, 1), got {self.betas}")
        bad_epochs = [e for e in self.save_epochs if not 1 <= e <= self.epochs]
        if bad_epochs:
            raise ConfigError(f"save_epochs outside 1..{self.epochs}: {bad_epochs}")

    def make_optimizer(self, params: Iterable[torch.nn.Parameter]) -> torch.optim.Optimizer:
        match self.optimizer:
            case OptimizerKind.SGD:
                return torch.optim.SGD(params, lr=self.learning_rate)
            case OptimizerKind.ADAM:
                return torch.optim.Adam(params, lr=self.learning_rate, betas=self.betas, eps=self.eps)
