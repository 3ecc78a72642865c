"""
Тесты DCT и частотного разложения
"""
import math
import os
import sys

import pytest
import torch

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import ConfigError, InvalidInputError
from src.frequency.dct import (
    create_dct_matrix,
    dct2,
    frequency_masks,
    idct2,
    make_enhanced_inputs,
    split_frequencies,
)


def brute_force_dct(grid: torch.Tensor) -> torch.Tensor:
    """Прямая сумма DCT-II для сверки"""
    h, w = grid.shape
    out = torch.zeros(h, w, dtype=torch.float64)
    for u in range(h):
        for v in range(w):
            cu = math.sqrt(1.0 / h) if u == 0 else math.sqrt(2.0 / h)
            cv = math.sqrt(1.0 / w) if v == 0 else math.sqrt(2.0 / w)
            total = 0.0
            for x in range(h):
                for y in range(w):
                    total += float(grid[x, y]) * math.cos(math.pi * u * (2 * x + 1) / (2 * h)) * \
                        math.cos(math.pi * v * (2 * y + 1) / (2 * w))
            out[u, v] = cu * cv * total
    return out


@pytest.fixture
def generator():
    g = torch.Generator()
    g.manual_seed(0)
    return g


class TestDct:
    """Тесты прямого и обратного DCT"""

    def test_constant_grid_has_only_dc(self):
        """Константа c на 8×8 даёт DC = 8c и нули"""
        grid = torch.full((8, 8), 0.3, dtype=torch.float64)
        coeffs = dct2(grid)
        assert abs(coeffs[0, 0].item() - 8 * 0.3) < 1e-12, "DC должен равняться c·√(HW)"
        coeffs[0, 0] = 0
        assert coeffs.abs().max().item() < 1e-12, "Остальные коэффициенты должны быть нулевыми"

    def test_impulse_matches_brute_force(self):
        grid = torch.zeros(4, 4, dtype=torch.float64)
        grid[0, 0] = 1.0
        assert torch.allclose(dct2(grid), brute_force_dct(grid), atol=1e-12), "Импульс должен совпасть с прямой суммой"

    def test_random_matches_brute_force(self, generator):
        grid = torch.rand(5, 7, generator=generator, dtype=torch.float64)
        assert torch.allclose(dct2(grid), brute_force_dct(grid), atol=1e-10)

    def test_round_trip(self, generator):
        for size in [(16, 16), (8, 13), (64, 64)]:
            grid = torch.rand(*size, generator=generator, dtype=torch.float64)
            assert (idct2(dct2(grid)) - grid).abs().max().item() < 1e-6, f"Обратимость нарушена для {size}"
            coeffs = torch.randn(*size, generator=generator, dtype=torch.float64)
            assert (dct2(idct2(coeffs)) - coeffs).abs().max().item() < 1e-6

    def test_parseval(self, generator):
        grid = torch.rand(3, 32, 24, generator=generator, dtype=torch.float64)
        energy = (grid ** 2).sum().item()
        coeff_energy = (dct2(grid) ** 2).sum().item()
        assert abs(energy - coeff_energy) / energy < 1e-6, "Энергия должна сохраняться"

    def test_idct_special_grids(self):
        assert torch.equal(idct2(torch.zeros(6, 6, dtype=torch.float64)), torch.zeros(6, 6, dtype=torch.float64))
        dc = torch.zeros(4, 9, dtype=torch.float64)
        dc[0, 0] = math.sqrt(36)
        assert torch.allclose(idct2(dc), torch.ones(4, 9, dtype=torch.float64), atol=1e-12)

    def test_dct_matrix_is_orthonormal(self):
        d = create_dct_matrix(11)
        assert torch.allclose(d @ d.t(), torch.eye(11, dtype=torch.float64), atol=1e-12)

    def test_non_finite_input_rejected(self):
        grid = torch.zeros(4, 4)
        grid[1, 2] = float("nan")
        with pytest.raises(InvalidInputError):
            dct2(grid)
        grid[1, 2] = float("inf")
        with pytest.raises(InvalidInputError):
            idct2(grid)


class TestSplitFrequencies:
    """Тесты разложения на высокие и низкие частоты"""

    def test_masks_partition_grid(self):
        low, high = frequency_masks(16, 20, 1.0 / 16.0)
        assert not (low & high).any(), "Маски не должны пересекаться"
        assert (low | high).all(), "Маски должны покрывать всю сетку"
        assert low[0, 0] and low.sum().item() == 6, "При τ=1/16 на 16×20 низкие частоты: u+v <= 2"

    def test_constant_image_is_all_low(self):
        image = torch.full((3, 16, 16), 0.42, dtype=torch.float64)
        pair = split_frequencies(image, 0.25)
        assert pair.high.abs().max().item() < 1e-6, "x_h константы должен быть нулевым"
        assert (pair.low - image).abs().max().item() < 1e-6

    def test_checkerboard(self):
        """Шахматка 0/1: низкие частоты - плоскость 0.5, высокие - чередование"""
        idx = torch.arange(16)
        board = ((idx[:, None] + idx[None, :]) % 2).to(torch.float64)
        image = board.expand(3, 16, 16).clone()
        pair = split_frequencies(image, 1.0 / 16.0)
        assert (pair.low - 0.5).abs().max().item() < 1e-9, "x_l должен быть константой 0.5"
        assert (pair.high - (image - 0.5)).abs().max().item() < 1e-9

    def test_complementarity(self, generator):
        for _ in range(100):
            size = int(torch.randint(8, 65, (1,), generator=generator))
            image = torch.rand(2, 3, size, size + 3, generator=generator)
            for tau in (0.05, 1.0 / 16.0, 0.5, 0.9):
                pair = split_frequencies(image, tau)
                assert (pair.high + pair.low - image).abs().max().item() < 1e-5, "x_h + x_l должно давать x"

    def test_energy_partition(self, generator):
        image = torch.rand(3, 32, 32, generator=generator, dtype=torch.float64)
        pair = split_frequencies(image, 1.0 / 16.0)
        total = (image ** 2).sum().item()
        parts = (pair.high ** 2).sum().item() + (pair.low ** 2).sum().item()
        assert abs(total - parts) / total < 1e-6, "Ортогональные компоненты делят энергию"

    def test_linearity(self, generator):
        x = torch.rand(3, 24, 24, generator=generator, dtype=torch.float64)
        y = torch.rand(3, 24, 24, generator=generator, dtype=torch.float64)
        combined = split_frequencies(2.0 * x - 0.5 * y)
        sx, sy = split_frequencies(x), split_frequencies(y)
        assert torch.allclose(combined.high, 2.0 * sx.high - 0.5 * sy.high, atol=1e-9)
        assert torch.allclose(combined.low, 2.0 * sx.low - 0.5 * sy.low, atol=1e-9)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
    def test_cutoff_out_of_range(self, tau):
        with pytest.raises(ConfigError):
            split_frequencies(torch.rand(3, 16, 16), tau)

    def test_invalid_images(self):
        with pytest.raises(InvalidInputError):
            split_frequencies(torch.rand(3, 4, 16))
        with pytest.raises(InvalidInputError):
            split_frequencies(torch.rand(4, 16, 16))


class TestEnhancedInputs:
    """Тесты сборки входов ветвей"""

    def test_channel_layout(self, generator):
        image = torch.rand(2, 3, 32, 32, generator=generator)
        inputs = make_enhanced_inputs(image)
        assert inputs.local_input.shape[1] == 6
        assert inputs.global_input.shape[1] == 6
        assert inputs.weight_input.shape[1] == 9
        assert torch.equal(inputs.local_input[:, :3], image), "Оригинал занимает каналы 0-2"
        assert torch.equal(inputs.global_input[:, :3], image)
        summed = inputs.weight_input[:, 3:6] + inputs.weight_input[:, 6:9]
        assert (summed - image).abs().max().item() < 1e-5

    def test_constant_image_global_gets_image(self):
        image = torch.full((1, 3, 16, 16), 0.7)
        inputs = make_enhanced_inputs(image)
        assert (inputs.global_input[:, 3:] - image).abs().max().item() < 1e-6

    def test_swapped_bands(self, generator):
        image = torch.rand(1, 3, 16, 16, generator=generator)
        pair = split_frequencies(image)
        inputs = make_enhanced_inputs(image, local_band="low", global_band="high")
        assert torch.equal(inputs.local_input[:, 3:], pair.low)
        assert torch.equal(inputs.global_input[:, 3:], pair.high)

    def test_without_dct_frequency_channels_are_zero(self, generator):
        image = torch.rand(1, 3, 16, 16, generator=generator)
        inputs = make_enhanced_inputs(image, use_dct=False)
        assert inputs.weight_input.shape[1] == 9
        assert not inputs.weight_input[:, 3:].any(), "Без DCT частотные каналы нулевые"

    def test_unknown_band(self):
        with pytest.raises(ConfigError):
            make_enhanced_inputs(torch.rand(1, 3, 16, 16), local_band="mid")
        print("✅ Тесты входов ветвей пройдены")
