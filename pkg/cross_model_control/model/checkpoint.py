'''
Checkpoint file layout, all little-endian:

    b"CMCK"                magic
    u16                    format version
    u32                    header length in bytes
    header                 UTF-8 JSON: config fields, vocab tag and a
                           name / shape / offset table (offsets in floats)
    f32[...]               parameter data in table order
'''
import json
import logging
import struct
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import numpy as np
import torch

from cross_model_control.util.custom_types import DataError
from .config import ModelConfig, ModelConfigError
from .transformer import TinyTransformer

logger = logging.getLogger(__name__)

MAGIC: Final = b'CMCK'
VERSION: Final = 1
_PREFIX: Final = struct.Struct('<4sHI')

class CheckpointError(DataError):
    pass

def save_checkpoint(m: TinyTransformer, path: Path) -> None:
    table = list[dict[str, Any]]()
    blobs = list[bytes]()
    offset = 0
    for name, param in m.state_dict().items():
        data = param.detach().cpu().to(torch.float32).contiguous().numpy().astype('<f4', copy=False)
        table.append({'name': name, 'shape': list(data.shape), 'offset': offset})
        blobs.append(data.tobytes())
        offset += data.size

    header = json.dumps({
        'config': m.config.as_dict(),
        'vocab_tag': m.vocab_tag,
        'params': table,
    }, sort_keys=True).encode('utf-8')

    with open(path, 'wb') as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)
    logger.info(f"Saved checkpoint ({offset} parameters) to {path}")

def load_checkpoint(path: Path) -> TinyTransformer:
    raw = path.read_bytes()
    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (magic {magic!r}, expected {MAGIC!r})")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")

    try:
        header = json.loads(raw[_PREFIX.size : _PREFIX.size + header_len].decode('utf-8'))
        cfg = ModelConfig.from_dict(header['config'])
        table = header['params']
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ModelConfigError) as e:
        raise CheckpointError(f"{path}: bad checkpoint header ({e})")

    model = TinyTransformer(cfg, header.get('vocab_tag'))
    expected = model.state_dict()
    if [entry['name'] for entry in table] != list(expected):
        raise CheckpointError(f"{path}: parameter table does not match the configured architecture")

    data = np.frombuffer(raw, dtype='<f4', offset=_PREFIX.size + header_len)
    state = dict[str, torch.Tensor]()
    for entry in table:
        shape = tuple(entry['shape'])
        count = int(np.prod(shape, dtype=np.int64))
        chunk = data[entry['offset'] : entry['offset'] + count]
        if chunk.size != count or shape != tuple(expected[entry['name']].shape):
            raise CheckpointError(f"{path}: parameter {entry['name']} is truncated or misshapen")
        state[entry['name']] = torch.from_numpy(chunk.astype(np.float32).reshape(shape))

    model.load_state_dict(state)
    model.eval()
    logger.info(f"Loaded checkpoint {path}")
    return model
