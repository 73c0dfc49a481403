'''
Debiased entropic optimal transport between weighted point clouds:

    S(A, B) = OT(A, B) - OT(A, A) / 2 - OT(B, B) / 2

with squared-Euclidean ground cost. OT is solved on dual potentials
in the log domain, with epsilon scaling from the cloud diameter down
to the target epsilon, then averaged (symmetric) updates until the
marginals are met, then one last plain update.
'''
import logging
import math
from dataclasses import dataclass
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch

from cross_model_control.util.custom_types import CmcError

logger = logging.getLogger(__name__)

class SinkhornError(CmcError):
    pass

@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 0.05
    max_iters: int = 1000
    tol: float = 1e-6
    ''' Largest accepted L1 violation of the two marginals. '''
    scaling: float = 0.5
    ''' Factor by which epsilon shrinks at each warm-up stage. '''

    def __post_init__(self):
        if not self.epsilon > 0:
            raise SinkhornError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise SinkhornError(f"max_iters must be at least 1, got {self.max_iters}")
        if not 0 < self.scaling < 1:
            raise SinkhornError(f"scaling must lie in (0, 1), got {self.scaling}")

class PointCloud(NamedTuple):
    points: torch.Tensor
    ''' (n, d) '''
    weights: torch.Tensor
    ''' (n,) probability vector '''

    @classmethod
    def uniform(cls, points: torch.Tensor) -> 'PointCloud':
        points = points.to(torch.float64)
        n = points.shape[0]
        return cls(points, torch.full((n,), 1.0 / n, dtype=torch.float64))

def _validate(cloud: PointCloud, name: str) -> PointCloud:
    points = cloud.points.to(torch.float64)
    weights = cloud.weights.to(torch.float64)
    if points.dim() != 2 or points.shape[0] == 0:
        raise SinkhornError(f"{name}: points must be a non-empty (n, d) matrix, got shape {tuple(points.shape)}")
    if weights.shape != (points.shape[0],):
        raise SinkhornError(f"{name}: {weights.shape[0]} weights for {points.shape[0]} points")
    if bool((weights < 0).any()) or not math.isclose(weights.sum().item(), 1.0, abs_tol=1e-9):
        raise SinkhornError(f"{name}: weights are not a probability vector")
    if not bool(torch.isfinite(points).all()):
        raise SinkhornError(f"{name}: non-finite coordinates")
    return PointCloud(points, weights)

def squared_euclidean(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    ''' Exact zero diagonal on identical inputs; `C(y, x) = C(x, y).T` bitwise. '''
    return ((x[:, None, :] - y[None, :, :]) ** 2).sum(dim=-1)

def _softmin(eps: float, cost: torch.Tensor, log_weights: torch.Tensor, potential: torch.Tensor) -> torch.Tensor:
    ''' -eps * log sum_j w_j exp((h_j - C_ij) / eps), over the last axis. '''
    return -eps * torch.logsumexp(log_weights[None, :] + (potential[None, :] - cost) / eps, dim=1)

def _marginal_error(eps: float, cost: torch.Tensor, a: torch.Tensor, b: torch.Tensor, f: torch.Tensor, g: torch.Tensor) -> float:
    log_plan = a.log()[:, None] + b.log()[None, :] + (f[:, None] + g[None, :] - cost) / eps
    plan = log_plan.exp()
    return (plan.sum(dim=1) - a).abs().sum().item() + (plan.sum(dim=0) - b).abs().sum().item()

def entropic_ot(A: PointCloud, B: PointCloud, cfg: SinkhornConfig = SinkhornConfig()) -> float:
    ''' Regularized transport value <a, f> + <b, g> at the dual optimum. '''
    A, B = _validate(A, 'A'), _validate(B, 'B')
    if A.points.shape[1] != B.points.shape[1]:
        raise SinkhornError(f"dimension mismatch: {A.points.shape[1]} vs {B.points.shape[1]}")
    a, b = A.weights, B.weights
    log_a, log_b = a.log(), b.log()
    cost_xy = squared_euclidean(A.points, B.points)
    cost_yx = cost_xy.T

    f = torch.zeros_like(a)
    g = torch.zeros_like(b)

    # warm-up: one averaged update per epsilon stage
    eps = max(cost_xy.max().item(), cfg.epsilon)
    while eps > cfg.epsilon:
        f, g = (
            (f + _softmin(eps, cost_xy, log_b, g)) / 2,
            (g + _softmin(eps, cost_yx, log_a, f)) / 2,
        )
        eps = max(eps * cfg.scaling, cfg.epsilon)

    eps = cfg.epsilon
    error = math.inf
    for iteration in range(cfg.max_iters):
        f, g = (
            (f + _softmin(eps, cost_xy, log_b, g)) / 2,
            (g + _softmin(eps, cost_yx, log_a, f)) / 2,
        )
        error = _marginal_error(eps, cost_xy, a, b, f, g)
        if error < cfg.tol:
            logger.debug(f"Sinkhorn converged after {iteration + 1} iterations (error {error:.2e})")
            break
    else:
        logger.warning(f"Sinkhorn stopped at {cfg.max_iters} iterations with marginal error {error:.2e}")

    # last extrapolation
    f, g = _softmin(eps, cost_xy, log_b, g), _softmin(eps, cost_yx, log_a, f)
    return float((a * f).sum().item() + (b * g).sum().item())

def sinkhorn_divergence(
        A: PointCloud,
        B: PointCloud,
        epsilon: float = 0.05,
        iters: int = 1000,
        *,
        tol: float = 1e-6,
) -> float:
    '''
    >>> cloud = PointCloud.uniform(torch.tensor([[0.0, 0.0], [1.0, 2.0]]))
    >>> sinkhorn_divergence(cloud, cloud)
    0.0
    '''
    cfg = SinkhornConfig(epsilon=epsilon, max_iters=iters, tol=tol)
    return entropic_ot(A, B, cfg) - entropic_ot(A, A, cfg) / 2 - entropic_ot(B, B, cfg) / 2
