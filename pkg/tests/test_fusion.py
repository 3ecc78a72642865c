"""
Тесты слияния помасштабных предсказаний
"""
import os
import sys

import pytest
import torch

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import InvalidInputError
from src.model.fusion import fuse
from src.model.outputs import PredictionSet, WeightMap


@pytest.fixture
def constant_maps():
    m = torch.full((1, 1, 4, 4), 0.3)
    return PredictionSet({b: m.clone() for b in range(1, 9)})


def random_weights(k: int, seed: int = 0) -> WeightMap:
    g = torch.Generator()
    g.manual_seed(seed)
    return WeightMap(torch.softmax(torch.randn(1, k, 4, 4, generator=g), dim=1))


class TestFuse:
    """Тесты равномерного и взвешенного слияния"""

    def test_uniform_sums_branches(self, constant_maps):
        result = fuse(constant_maps, None, 4, 4)
        assert torch.allclose(result.summed, torch.full((1, 1, 4, 4), 8 * 0.3)), "Равномерное слияние даёт 8m"

    def test_adaptive_of_identical_maps(self, constant_maps):
        result = fuse(constant_maps, random_weights(8), 4, 4)
        assert torch.allclose(result.summed, torch.full((1, 1, 4, 4), 0.3), atol=1e-6), \
            "Выпуклая комбинация одинаковых карт равна самой карте"

    def test_one_hot_selection(self):
        p_all = torch.zeros(1, 8, 4, 4)
        p_all[:, 5] = 2.5
        preds = PredictionSet.from_tensor(p_all)
        w = torch.zeros(1, 8, 4, 4)
        w[:, 5] = 1.0
        result = fuse(preds, WeightMap(w), 4, 4)
        assert torch.equal(result.summed, torch.full((1, 1, 4, 4), 2.5))

    def test_result_inside_branch_range(self):
        g = torch.Generator()
        g.manual_seed(4)
        p_all = torch.randn(1, 8, 4, 4, generator=g)
        result = fuse(PredictionSet.from_tensor(p_all), random_weights(8, seed=2), 4, 4)
        low = p_all.min(dim=1, keepdim=True).values
        high = p_all.max(dim=1, keepdim=True).values
        assert bool((result.summed >= low - 1e-6).all() and (result.summed <= high + 1e-6).all())

    def test_upsamples_to_image(self, constant_maps):
        result = fuse(constant_maps, None, 16, 16)
        assert result.full.shape == (1, 1, 16, 16)
        assert torch.allclose(result.full, torch.full((1, 1, 16, 16), 2.4))
        assert torch.allclose(result.probability, torch.sigmoid(result.full))

    def test_pruned_subset(self):
        """Пять выживших ветвей: веса и карты той же длины K"""
        branches = [1, 2, 4, 6, 7]
        p_all = torch.rand(2, 5, 4, 4)
        weights = random_weights(5)
        result = fuse(PredictionSet.from_tensor(p_all, branches), weights, 4, 4)
        expected = (weights.weights.expand(2, -1, -1, -1) * p_all).sum(dim=1, keepdim=True)
        assert torch.allclose(result.summed, expected, atol=1e-6)

    def test_shape_mismatch(self, constant_maps):
        with pytest.raises(InvalidInputError):
            fuse(constant_maps, random_weights(5), 4, 4)
        bad = PredictionSet({1: torch.zeros(1, 1, 4, 4), 2: torch.zeros(1, 1, 2, 2)})
        with pytest.raises(InvalidInputError):
            fuse(bad, None, 4, 4)
        with pytest.raises(InvalidInputError):
            fuse(PredictionSet({}), None, 4, 4)
        print("✅ Тесты слияния пройдены")
