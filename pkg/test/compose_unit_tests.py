import math

import numpy as np
import pytest
import torch

from cross_model_control.compose import (
    CompositionError,
    CompositionMode,
    CompositionSpec,
    compose_infer,
    compose_proxy,
    compose_train,
    log_softmax,
)
from cross_model_control.tokenmap import UNMAPPED, MappingStrategy, TokenMapping


def _randn(*shape: int, seed: int = 0) -> torch.Tensor:
    return torch.randn(*shape, generator=torch.Generator().manual_seed(seed), dtype=torch.float64)


class TestLogSoftmax:
    """Test the normalizer."""

    def test_normalized(self):
        out = log_softmax(_randn(3, 7))
        assert torch.allclose(out.exp().sum(dim=-1), torch.ones(3, dtype=torch.float64))

    def test_shift_invariant(self):
        v = _randn(5)
        assert torch.allclose(log_softmax(v), log_softmax(v + 1000.0))

    def test_large_values(self):
        out = log_softmax(torch.tensor([1e4, 0.0], dtype=torch.float64))
        assert torch.isfinite(out).all()
        assert out[0].item() == 0.0

    def test_keeps_dtype(self):
        assert log_softmax(torch.zeros(4, dtype=torch.float32)).dtype == torch.float32


class TestComposeTrain:
    """Test the training-time sum."""

    def test_sum(self):
        zeta_t, zeta_d = _randn(4, 6, seed=1), _randn(4, 6, seed=2)
        assert torch.allclose(compose_train(zeta_t, zeta_d), log_softmax(zeta_t) + zeta_d)

    def test_delta_not_normalized(self):
        zeta_t = torch.zeros(3, dtype=torch.float64)
        zeta_d = torch.tensor([5.0, 5.0, 5.0], dtype=torch.float64)
        out = compose_train(zeta_t, zeta_d)
        assert torch.allclose(out, torch.full((3,), 5.0 - math.log(3), dtype=torch.float64))

    def test_length_mismatch(self):
        with pytest.raises(CompositionError) as exc_info:
            compose_train(torch.zeros(3), torch.zeros(4))
        assert "length mismatch" in str(exc_info.value)


class TestComposeInfer:
    """Test the inference-time sum through a token mapping."""

    def test_alpha_zero_is_unsteered(self):
        zeta_u, zeta_d = _randn(9, seed=3), _randn(9, seed=4)
        spec = CompositionSpec(alpha=0.0)
        assert torch.equal(compose_infer(zeta_u, zeta_d, spec), log_softmax(zeta_u))

    def test_unmapped_tokens_unchanged(self):
        zeta_u = _randn(4, seed=5)
        mapping = TokenMapping(MappingStrategy.PM_MINED, np.array([0, UNMAPPED, 2, 1]), delta_size=3)
        zeta_d = torch.tensor([1.0, 2.0, 3.0], dtype=torch.float64)
        out = compose_infer(zeta_u, zeta_d, CompositionSpec(alpha=0.5, mapping=mapping))
        base = log_softmax(zeta_u)
        assert out[1].item() == base[1].item()
        assert torch.allclose(out[[0, 2, 3]], base[[0, 2, 3]] + 0.5 * torch.tensor([1.0, 3.0, 2.0], dtype=torch.float64))

    def test_identity_mapping_equals_plain_sum(self):
        zeta_u, zeta_d = _randn(2, 5, seed=6), _randn(2, 5, seed=7)
        mapping = TokenMapping(MappingStrategy.EXACT, np.arange(5), delta_size=5)
        with_map = compose_infer(zeta_u, zeta_d, CompositionSpec(alpha=1.5, mapping=mapping))
        without = compose_infer(zeta_u, zeta_d, CompositionSpec(alpha=1.5))
        assert torch.equal(with_map, without)

    def test_differing_vocabularies_need_mapping(self):
        with pytest.raises(CompositionError) as exc_info:
            compose_infer(torch.zeros(5), torch.zeros(3), CompositionSpec())
        assert "token mapping is required" in str(exc_info.value)

    def test_mapping_width(self):
        mapping = TokenMapping(MappingStrategy.EXACT, np.arange(3), delta_size=3)
        with pytest.raises(CompositionError) as exc_info:
            compose_infer(torch.zeros(5), torch.zeros(3), CompositionSpec(mapping=mapping))
        assert "mapping expects 3" in str(exc_info.value)

    def test_raw_base_ablation(self):
        zeta_u, zeta_d = _randn(6, seed=8), _randn(6, seed=9)
        out = compose_infer(zeta_u, zeta_d, CompositionSpec(logsoftmax_on_base=False))
        assert torch.allclose(out, zeta_u + zeta_d)

    def test_none_mode(self):
        zeta_u = _randn(6, seed=10)
        out = compose_infer(zeta_u, None, CompositionSpec(CompositionMode.NONE))
        assert torch.equal(out, log_softmax(zeta_u))

    def test_missing_delta(self):
        with pytest.raises(CompositionError) as exc_info:
            compose_infer(torch.zeros(3), None, CompositionSpec())
        assert "needs delta logits" in str(exc_info.value)

    def test_negative_alpha(self):
        with pytest.raises(CompositionError) as exc_info:
            CompositionSpec(alpha=-1.0)
        assert "alpha" in str(exc_info.value)

    def test_with_alpha(self):
        spec = CompositionSpec(alpha=1.0, logsoftmax_on_base=False)
        assert spec.with_alpha(0.25) == CompositionSpec(alpha=0.25, logsoftmax_on_base=False)


class TestComposeProxy:
    """Test the expert/anti-expert baseline."""

    def test_equal_experts_cancel(self):
        zeta_u, zeta_e = _randn(7, seed=11), _randn(7, seed=12)
        out = compose_proxy(zeta_u, zeta_e, zeta_e, alpha=2.0)
        assert torch.allclose(out, log_softmax(zeta_u))

    def test_needs_antiexpert(self):
        with pytest.raises(CompositionError) as exc_info:
            compose_infer(torch.zeros(3), torch.zeros(3), CompositionSpec(CompositionMode.PROXY))
        assert "anti-expert" in str(exc_info.value)
