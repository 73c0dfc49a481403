'''
Logit arithmetic: log-softmax, the training-time sum of template and
delta logits, the inference-time sum with strength alpha and token
mapping, and the expert/anti-expert baseline.

Every function works on the last dimension, so vectors and
positions x vocabulary matrices are both accepted. Arithmetic is
done in 64-bit; results come back in the promoted input dtype.
'''
import enum
import math
from dataclasses import dataclass
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.tokenmap import TokenMapping, scatter_logits
from cross_model_control.util.custom_types import CmcError


class CompositionError(CmcError):
    pass

class CompositionMode(enum.Enum):
    CMC = 'cmc'
    PROXY = 'proxy'
    ''' Expert minus anti-expert log-probabilities; one shared vocabulary. '''
    NONE = 'none'

@dataclass(frozen=True)
class CompositionSpec:
    mode: CompositionMode = CompositionMode.CMC
    alpha: float = 1.0
    logsoftmax_on_base: bool = True
    mapping: TokenMapping | None = None

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise CompositionError(f"alpha must be a finite number >= 0, got {self.alpha}")

    def with_alpha(self, alpha: float) -> 'CompositionSpec':
        return CompositionSpec(self.mode, alpha, self.logsoftmax_on_base, self.mapping)

def _result_dtype(*tensors: torch.Tensor) -> torch.dtype:
    dtype = tensors[0].dtype
    for t in tensors[1:]:
        dtype = torch.promote_types(dtype, t.dtype)
    return dtype

def _check_same_shape(**tensors: torch.Tensor) -> None:
    shapes = {name: tuple(t.shape) for name, t in tensors.items()}
    if len(set(shapes.values())) > 1:
        raise CompositionError(
            "length mismatch: " + ", ".join(f"{name} {shape}" for name, shape in shapes.items()))

def _log_softmax64(v: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(v).all():
        raise CompositionError("log_softmax of non-finite input")
    v = v.to(torch.float64)
    shifted = v - v.amax(dim=-1, keepdim=True)
    return shifted - torch.logsumexp(shifted, dim=-1, keepdim=True)

def log_softmax(v: torch.Tensor) -> torch.Tensor:
    '''
    >>> [round(x, 9) for x in log_softmax(torch.tensor([0.0, math.log(3)], dtype=torch.float64)).tolist()]
    [-1.386294361, -0.287682072]
    >>> log_softmax(torch.tensor([1.0, float('inf')]))
    Traceback (most recent call last):
        ...
    cross_model_control.compose.CompositionError: log_softmax of non-finite input
    '''
    return _log_softmax64(v).to(v.dtype)

def _base64(zeta: torch.Tensor, logsoftmax_on_base: bool) -> torch.Tensor:
    if logsoftmax_on_base:
        return _log_softmax64(zeta)
    return zeta.to(torch.float64)

def compose_train(zeta_t: torch.Tensor, zeta_d: torch.Tensor, logsoftmax_on_base: bool = True) -> torch.Tensor:
    '''
    Template logits (log-softmaxed unless ablated) plus raw delta logits.
    The delta side is never normalized.

    >>> compose_train(torch.zeros(2), torch.tensor([1.0, -1.0]), logsoftmax_on_base=False).tolist()
    [1.0, -1.0]
    '''
    _check_same_shape(zeta_t=zeta_t, zeta_d=zeta_d)
    out = _base64(zeta_t, logsoftmax_on_base) + zeta_d.to(torch.float64)
    return out.to(_result_dtype(zeta_t, zeta_d))

def compose_proxy(
        zeta_u: torch.Tensor,
        zeta_expert: torch.Tensor,
        zeta_antiexpert: torch.Tensor,
        alpha: float,
) -> torch.Tensor:
    _check_same_shape(zeta_u=zeta_u, zeta_expert=zeta_expert, zeta_antiexpert=zeta_antiexpert)
    difference = _log_softmax64(zeta_expert) - _log_softmax64(zeta_antiexpert)
    out = _log_softmax64(zeta_u) + alpha * difference
    return out.to(_result_dtype(zeta_u, zeta_expert, zeta_antiexpert))

def compose_infer(
        zeta_u: torch.Tensor,
        zeta_d: torch.Tensor | None,
        spec: CompositionSpec,
        *,
        zeta_antiexpert: torch.Tensor | None = None,
) -> torch.Tensor:
    '''
    Final decoding logits over the user vocabulary.

    With mode `cmc`, `zeta_d` is over the delta vocabulary and is
    gathered through `spec.mapping`; without a mapping both vocabularies
    must coincide. With mode `proxy`, `zeta_d` is the expert's logits
    and `zeta_antiexpert` is required.
    '''
    if zeta_d is None and spec.mode is not CompositionMode.NONE:
        raise CompositionError(f"{spec.mode.value} composition needs delta logits")
    match spec.mode:
        case CompositionMode.NONE:
            return _base64(zeta_u, spec.logsoftmax_on_base).to(zeta_u.dtype)

        case CompositionMode.PROXY:
            if zeta_antiexpert is None:
                raise CompositionError("proxy composition needs anti-expert logits")
            return compose_proxy(zeta_u, zeta_d, zeta_antiexpert, spec.alpha)

        case CompositionMode.CMC:
            if spec.mapping is None:
                if zeta_u.shape != zeta_d.shape:
                    raise CompositionError(
                        f"A token mapping is required to compose {zeta_u.shape[-1]}-token"
                        f" user logits with {zeta_d.shape[-1]}-token delta logits")
                adjustment = zeta_d.to(torch.float64)
            else:
                if zeta_u.shape[-1] != spec.mapping.user_size:
                    raise CompositionError(
                        f"User logits have {zeta_u.shape[-1]} entries,"
                        f" mapping expects {spec.mapping.user_size}")
                adjustment = scatter_logits(zeta_d.to(torch.float64), spec.mapping)
                if adjustment.shape != zeta_u.shape:
                    raise CompositionError(f"length mismatch: user {tuple(zeta_u.shape)}, delta {tuple(zeta_d.shape)}")
            out = _base64(zeta_u, spec.logsoftmax_on_base) + spec.alpha * adjustment
            return out.to(_result_dtype(zeta_u, zeta_d))
