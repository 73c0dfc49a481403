from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ModelConfig, ModelConfigError
from .transformer import (
    ContextExceededError,
    LogitsMatrix,
    ModelFrozenError,
    TinyTransformer,
    backward,
    forward,
    init_model,
)

__all__ = [
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "ModelConfig",
    "ModelConfigError",
    "ContextExceededError",
    "LogitsMatrix",
    "ModelFrozenError",
    "TinyTransformer",
    "backward",
    "forward",
    "init_model",
]
