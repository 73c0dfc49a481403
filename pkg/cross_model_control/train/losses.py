from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.vocab import TokenSequence
from .config import TrainingError
from .data import Batch


def masked_nll(logits: torch.Tensor, next_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    '''
    Mean negative log-likelihood over masked positions, in 64-bit.

    Args:
        logits: (..., T, |V|)
        next_ids: (..., T) the token each row scores
        mask: (..., T) bool
    '''
    if not bool(mask.any()):
        raise TrainingError("no supervised positions")
    log_probs = torch.log_softmax(logits.to(torch.float64), dim=-1)
    picked = log_probs.gather(-1, next_ids.unsqueeze(-1)).squeeze(-1)
    return -(picked[mask]).mean()

def cross_entropy(
        logits: torch.Tensor,
        targets: TokenSequence | torch.Tensor,
        mask: Iterable[int] | torch.Tensor | None = None,
) -> torch.Tensor:
    '''
    Logits row t scores `targets[t + 1]`. `mask` holds the rows
    that count (default: every row with a next token).

    >>> import math
    >>> logits = torch.tensor([[0.0, math.log(3)], [0.0, 0.0]], dtype=torch.float64)
    >>> loss = cross_entropy(logits, torch.tensor([0, 1, 0]))
    >>> abs(loss.item() - (-(math.log(3) - math.log(4)) + math.log(2)) / 2) < 1e-12
    True
    '''
    ids = targets.as_tensor() if isinstance(targets, TokenSequence) else targets.long()
    rows = logits.shape[-2]
    usable = min(rows, len(ids) - 1)
    if usable < 1:
        raise TrainingError("no supervised positions")

    if mask is None:
        row_mask = torch.zeros(rows, dtype=torch.bool)
        row_mask[:usable] = True
    elif isinstance(mask, torch.Tensor):
        row_mask = mask.bool()
    else:
        row_mask = torch.zeros(rows, dtype=torch.bool)
        for t in mask:
            row_mask[t] = True
    if bool(row_mask[usable:].any()):
        raise TrainingError(f"Masked positions beyond the last predictable row ({usable - 1})")

    next_ids = torch.zeros(rows, dtype=torch.long)
    next_ids[:usable] = ids[1 : usable + 1]
    return masked_nll(logits, next_ids, row_mask)

def batch_loss(logits: torch.Tensor, batch: Batch) -> torch.Tensor:
    return masked_nll(logits, batch.targets, batch.mask)

def gradient_difference(forget_loss: torch.Tensor | float, retain_loss: torch.Tensor | float) -> torch.Tensor | float:
    '''
    >>> gradient_difference(2.0, 1.0)
    -1.0
    '''
    return -forget_loss + retain_loss

def unlearn_loss(
        logits_f: torch.Tensor,
        targets_f: TokenSequence | torch.Tensor,
        logits_r: torch.Tensor,
        targets_r: TokenSequence | torch.Tensor,
        *,
        mask_f: Iterable[int] | torch.Tensor | None = None,
        mask_r: Iterable[int] | torch.Tensor | None = None,
) -> torch.Tensor:
    ''' Ascend on the forget side, descend on the retain side. '''
    return cast(torch.Tensor, gradient_difference(
        cross_entropy(logits_f, targets_f, mask_f),
        cross_entropy(logits_r, targets_r, mask_r),
    ))
