from dataclasses import asdict, dataclass, fields
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.util.custom_types import ConfigError


class ModelConfigError(ConfigError):
    pass

@dataclass(frozen=True)
class ModelConfig:
    '''
    Shape and seed of a `TinyTransformer`.

    >>> ModelConfig(vocab_size=10, context_len=8, d_model=8, n_layers=1, n_heads=3, d_ff=16)
    Traceback (most recent call last):
        ...
    cross_model_control.model.config.ModelConfigError: d_model not divisible by n_heads (8, 3)
    '''
    vocab_size: int
    context_len: int
    d_model: int
    n_layers: int
    n_heads: int
    d_ff: int
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ModelConfigError(f"{f.name} must be an integer, got {value!r}")
            if f.name != 'seed' and value < 1:
                raise ModelConfigError(f"{f.name} must be at least 1, got {value}")
        if self.context_len < 2:
            raise ModelConfigError(f"context_len must be at least 2, got {self.context_len}")
        if self.d_model % self.n_heads != 0:
            raise ModelConfigError(f"d_model not divisible by n_heads ({self.d_model}, {self.n_heads})")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> Self:
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ModelConfigError(f"Unknown model config keys: {', '.join(sorted(unknown))}")
        missing = {f.name for f in fields(cls) if f.name != 'seed'} - set(values)
        if missing:
            raise ModelConfigError(f"Missing model config keys: {', '.join(sorted(missing))}")
        return cls(**values)

    @classmethod
    def delta_default(cls, vocab_size: int, *, context_len: int = 128, seed: int = 0) -> Self:
        ''' 2 layers, width 64, 2 heads. '''
        return cls(vocab_size, context_len, d_model=64, n_layers=2, n_heads=2, d_ff=256, seed=seed)

    @classmethod
    def base_default(cls, vocab_size: int, *, context_len: int = 128, seed: int = 0) -> Self:
        ''' Template/user size: 4 layers, width 128, 4 heads. '''
        return cls(vocab_size, context_len, d_model=128, n_layers=4, n_heads=4, d_ff=512, seed=seed)
