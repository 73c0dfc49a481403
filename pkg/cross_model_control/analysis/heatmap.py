'''
Heatmap export: per response step, the top-k tokens by the tuned
model's logits, ordered by their primary shift value (largest first),
and the same tokens looked up in a second shift tensor through a
token mapping.

Written as two tab-separated k-column matrices (`NA` where the
secondary token is unmapped) plus a JSON sidecar with k, the step
count and the token strings of every cell.
'''
import json
import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import numpy as np
import pandas as pd

from cross_model_control.tokenmap import UNMAPPED, TokenMapping
from cross_model_control.vocab import Vocabulary
from .shift import ShiftError, ShiftTensor

logger = logging.getLogger(__name__)

class HeatmapMatrices(NamedTuple):
    primary: pd.DataFrame
    secondary: pd.DataFrame
    ''' NaN where the selected token has no counterpart. '''
    token_ids: list[list[int]]
    ''' Primary-vocabulary ids of each step's columns. '''

def heatmap_export(
        shift_primary: ShiftTensor,
        shift_secondary: ShiftTensor,
        mapping: TokenMapping,
        k: int,
) -> HeatmapMatrices:
    if not 1 <= k <= shift_primary.vocab_size:
        raise ShiftError(f"k must lie in 1..{shift_primary.vocab_size}, got {k}")
    if mapping.user_size != shift_primary.vocab_size or mapping.delta_size != shift_secondary.vocab_size:
        raise ShiftError("Mapping does not connect the two shift tensors' vocabularies")
    steps = min(shift_primary.positions, shift_secondary.positions)
    if shift_primary.positions != shift_secondary.positions:
        logger.warning(
            f"Shift tensors have {shift_primary.positions} and {shift_secondary.positions} rows;"
            f" exporting the first {steps}")

    primary_rows, secondary_rows, token_ids = list[list[float]](), list[list[float]](), list[list[int]]()
    for t in range(steps):
        top = shift_primary.tuned_logits[t].topk(k).indices
        shifts = shift_primary.values[t, top]
        # stable order on ties
        order = sorted(range(k), key=lambda j: (-shifts[j].item(), int(top[j])))
        columns = [int(top[j]) for j in order]

        primary_rows.append([shift_primary.values[t, i].item() for i in columns])
        secondary_rows.append([
            shift_secondary.values[t, int(mapping.entries[i])].item()
            if mapping.entries[i] != UNMAPPED else np.nan
            for i in columns
        ])
        token_ids.append(columns)

    column_names = [f"c{j}" for j in range(k)]
    return HeatmapMatrices(
        primary=pd.DataFrame(primary_rows, columns=column_names, dtype=float),
        secondary=pd.DataFrame(secondary_rows, columns=column_names, dtype=float),
        token_ids=token_ids,
    )

def write_heatmap(h: HeatmapMatrices, out_dir: Path, vocab: Vocabulary | None = None, stem: str = 'heatmap') -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    primary_path = out_dir / f"{stem}_primary.tsv"
    secondary_path = out_dir / f"{stem}_secondary.tsv"
    sidecar_path = out_dir / f"{stem}.json"

    h.primary.to_csv(primary_path, sep='\t', index=False, float_format='%.9g')
    h.secondary.to_csv(secondary_path, sep='\t', index=False, float_format='%.9g', na_rep='NA')
    sidecar = {
        'k': h.primary.shape[1],
        'steps': h.primary.shape[0],
        'token_ids': h.token_ids,
        'tokens': [[vocab.tokens[i] for i in row] for row in h.token_ids] if vocab is not None else None,
    }
    sidecar_path.write_text(json.dumps(sidecar, ensure_ascii=False, indent=1), encoding='utf-8')
    logger.info(f"Wrote heatmap matrices to {out_dir}")
    return [primary_path, secondary_path, sidecar_path]

def column_trend(matrix: pd.DataFrame) -> float:
    '''
    Spearman correlation between column index and mean column value;
    close to -1 when values fall from left to right.

    >>> round(column_trend(pd.DataFrame([[3.0, 2.0, 1.0], [6.0, 5.0, 4.0]])), 6)
    -1.0
    '''
    means = matrix.mean(axis=0, skipna=True).reset_index(drop=True)
    index = pd.Series(range(len(means)), dtype=float)
    return float(index.rank().corr(means.rank()))
