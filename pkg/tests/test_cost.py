"""
Тесты подсчёта параметров и FLOPs
"""
import json
import os
import sys

import pytest
import torch
import torch.nn as nn

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.metrics.cost import count_cost, count_model_cost, count_module_cost
from src.model import build_model, toy_model_config
from src.model.encoders import EfficientAttention


@pytest.fixture(scope="module")
def toy_cost():
    return count_cost(toy_model_config())


class TestModuleCost:
    """Тесты формул для отдельных слоёв"""

    def test_single_conv(self):
        conv = nn.Conv2d(6, 16, kernel_size=3, padding=1)
        report = count_module_cost(conv, (1, 6, 64, 64))
        assert report.params == 3 * 3 * 6 * 16 + 16 == 880
        assert report.flops == 2 * 9 * 6 * 16 * 64 * 64, "FLOPs = 2 × MAC"

    def test_conv_scales_with_area(self):
        conv = nn.Conv2d(6, 16, kernel_size=3, padding=1)
        small = count_module_cost(conv, (1, 6, 32, 32)).flops
        large = count_module_cost(conv, (1, 6, 64, 64)).flops
        assert large == 4 * small

    def test_grouped_conv(self):
        conv = nn.Conv2d(8, 8, kernel_size=3, padding=1, groups=8)
        assert count_module_cost(conv, (1, 8, 10, 10)).flops == 2 * 9 * 8 * 100

    def test_linear(self):
        layer = nn.Linear(10, 4)
        report = count_module_cost(layer, (1, 7, 10))
        assert report.params == 44
        assert report.flops == 2 * 10 * 4 * 7

    def test_attention_matmuls(self):
        attention = EfficientAttention(dim=8, num_heads=2, sr_ratio=1)
        with torch.no_grad():
            attention(torch.zeros(1, 16, 8), 4, 4)
        assert attention.last_matmul_flops == 2 * 2 * 16 * 16 * 8


class TestModelCost:
    """Тесты стоимости всей сети"""

    def test_deterministic(self, toy_cost):
        again = count_cost(toy_model_config())
        assert again.flops == toy_cost.flops
        assert again.params == toy_cost.params

    def test_params_match_model(self, toy_cost):
        model = build_model(toy_model_config(), seed=0)
        assert toy_cost.params == sum(p.numel() for p in model.parameters())

    def test_breakdown_sums_to_total(self, toy_cost):
        assert set(toy_cost.breakdown) == {"local_encoder", "global_encoder", "decoders", "weighting"}
        assert sum(part["flops"] for part in toy_cost.breakdown.values()) == toy_cost.flops
        assert sum(part["params"] for part in toy_cost.breakdown.values()) == toy_cost.params

    def test_pruned_is_cheaper(self, toy_cost):
        pruned = count_cost(toy_model_config(active_branches=[1, 2, 3, 5, 6, 7]))
        assert pruned.flops < toy_cost.flops, "Без 4-го масштаба FLOPs строго меньше"
        assert pruned.params < toy_cost.params

    def test_uniform_has_no_weighting(self):
        report = count_cost(toy_model_config(fusion_mode="uniform"))
        assert "weighting" not in report.breakdown

    def test_custom_input_size(self, toy_cost):
        report = count_cost(toy_model_config(), input_size=(128, 128))
        assert report.input_size == (128, 128)
        assert report.params == toy_cost.params
        assert report.flops > toy_cost.flops

    def test_keeps_training_mode(self):
        model = build_model(toy_model_config(), seed=0)
        model.train()
        count_model_cost(model)
        assert model.training

    def test_json(self, tmp_path, toy_cost):
        path = toy_cost.write_json(tmp_path / "cost.json")
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        assert data["flops"] == toy_cost.flops
        assert data["input_size"] == [64, 64]
        print("✅ Тесты стоимости пройдены")
