import hashlib
import math
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch


# region Iteration

def pairwise_cycle[T1, T2](lead: Sequence[T1], follow: Sequence[T2]) -> Iterator[tuple[T1, T2]]:
    '''
    Pair every item of `lead` with an item of `follow`,
    cycling `follow` if it is shorter.

    >>> list(pairwise_cycle([1, 2, 3], ['a', 'b']))
    [(1, 'a'), (2, 'b'), (3, 'a')]
    '''
    assert len(follow) > 0, "Cannot cycle an empty sequence."
    for i, item in enumerate(lead):
        yield item, follow[i % len(follow)]

def chunked[T](items: Sequence[T], size: int) -> Iterator[Sequence[T]]:
    '''
    >>> [list(c) for c in chunked([1, 2, 3, 4, 5], 2)]
    [[1, 2], [3, 4], [5]]
    '''
    assert size >= 1, f"Bad chunk size: {size}"
    for start in range(0, len(items), size):
        yield items[start : start + size]

# endregion Iteration
# region Parsing

def parse_float_list(value: str | Sequence[float]) -> tuple[float, ...]:
    '''
    Accepts a comma-separated string (CLI) or a list (TOML).

    >>> parse_float_list("0.5,0.75, 1.0")
    (0.5, 0.75, 1.0)
    >>> parse_float_list([1, 2])
    (1.0, 2.0)
    '''
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(',')]
        return tuple(float(p) for p in parts if p)
    return tuple(float(v) for v in value)

def parse_int_list(value: str | Sequence[int]) -> tuple[int, ...]:
    '''
    >>> parse_int_list("2,4")
    (2, 4)
    '''
    if isinstance(value, str):
        return tuple(int(p) for p in value.split(',') if p.strip())
    return tuple(int(v) for v in value)

# endregion Parsing
# region Numerics

def geometric_mean(values: Iterable[float]) -> float:
    '''
    >>> round(geometric_mean([0.5, 0.125]), 12)
    0.25
    >>> geometric_mean([0.0, 1.0])
    0.0
    '''
    values = list(values)
    assert values, "Geometric mean of nothing."
    if any(v == 0.0 for v in values):
        return 0.0
    return math.exp(sum(math.log(v) for v in values) / len(values))

def tensor_checksum(t: torch.Tensor) -> str:
    ''' SHA-256 over the raw little-endian bytes of a tensor. '''
    data = t.detach().cpu().contiguous().numpy()
    data = data.astype(data.dtype.newbyteorder('<'), copy=False)
    return hashlib.sha256(data.tobytes()).hexdigest()

def params_checksum(named: Iterable[tuple[str, torch.Tensor]]) -> str:
    ''' Order-sensitive checksum over named tensors. '''
    digest = hashlib.sha256()
    for name, tensor in named:
        digest.update(name.encode('utf-8'))
        digest.update(tensor_checksum(tensor).encode('ascii'))
    return digest.hexdigest()

# endregion Numerics
# region Files

def file_checksum(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()

# endregion Files
