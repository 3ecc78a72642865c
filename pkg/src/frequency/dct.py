"""
Ортонормированное 2D DCT и разложение изображения на высокие/низкие частоты
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import torch

from src.errors import ConfigError, InvalidInputError

DEFAULT_CUTOFF = 1.0 / 16.0
MIN_IMAGE_SIDE = 8
BANDS = ("high", "low")


@dataclass
class FrequencyPair:
    """Комплементарные компоненты изображения: high + low == исходное"""
    high: torch.Tensor
    low: torch.Tensor

    def band(self, name: str) -> torch.Tensor:
        if name == "high":
            return self.high
        if name == "low":
            return self.low
        raise ConfigError(f"Неизвестная частотная полоса: {name}")


@dataclass
class EnhancedInput:
    """Входы трёх ветвей: оригинал всегда занимает каналы 0-2"""
    local_input: torch.Tensor
    global_input: torch.Tensor
    weight_input: torch.Tensor


@lru_cache(maxsize=32)
def _dct_matrix_cpu(n: int) -> torch.Tensor:
    n_idx = torch.arange(n, dtype=torch.float64).reshape(1, n)
    k_idx = torch.arange(n, dtype=torch.float64).reshape(n, 1)
    matrix = math.sqrt(2.0 / n) * torch.cos(math.pi * k_idx * (2 * n_idx + 1) / (2 * n))
    matrix[0, :] = 1.0 / math.sqrt(n)
    return matrix


def create_dct_matrix(n: int, device=None) -> torch.Tensor:
    """
    Матрица ортонормированного DCT-II размера n×n (float64)

    Args:
        n: Длина сигнала
        device: Устройство для результата

    Returns:
        Матрица D, такая что D @ x - коэффициенты DCT столбца x
    """
    matrix = _dct_matrix_cpu(int(n))
    if device is not None:
        matrix = matrix.to(device)
    return matrix


def _check_finite(grid: torch.Tensor, what: str):
    if grid.dim() < 2:
        raise InvalidInputError(f"{what}: ожидается сетка H×W, получена форма {tuple(grid.shape)}")
    if grid.shape[-1] < 1 or grid.shape[-2] < 1:
        raise InvalidInputError(f"{what}: пустая сетка {tuple(grid.shape)}")
    if not bool(torch.isfinite(grid).all()):
        raise InvalidInputError(f"{what}: во входе есть NaN/Inf")


def dct2(grid: torch.Tensor) -> torch.Tensor:
    """
    Двумерное ортонормированное DCT-II по двум последним осям

    Args:
        grid: Тензор (..., H, W)

    Returns:
        Коэффициенты той же формы и типа
    """
    _check_finite(grid, "dct2")
    h, w = grid.shape[-2], grid.shape[-1]
    d_h = create_dct_matrix(h, grid.device)
    d_w = create_dct_matrix(w, grid.device)
    coeffs = d_h @ grid.to(torch.float64) @ d_w.t()
    return coeffs.to(grid.dtype)


def idct2(coeffs: torch.Tensor) -> torch.Tensor:
    """Обратное преобразование к dct2"""
    _check_finite(coeffs, "idct2")
    h, w = coeffs.shape[-2], coeffs.shape[-1]
    d_h = create_dct_matrix(h, coeffs.device)
    d_w = create_dct_matrix(w, coeffs.device)
    grid = d_h.t() @ coeffs.to(torch.float64) @ d_w
    return grid.to(coeffs.dtype)


def frequency_masks(height: int, width: int, cutoff: float, device=None) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Маски низких и высоких частот по диагонали зиг-зага

    Коэффициент (u, v) низкочастотный, если u + v <= floor(cutoff * (H + W - 2)).

    Returns:
        (low_mask, high_mask) - булевы маски H×W, не пересекаются и покрывают всю сетку
    """
    _check_cutoff(cutoff)
    limit = math.floor(cutoff * (height + width - 2))
    u = torch.arange(height, device=device).reshape(height, 1)
    v = torch.arange(width, device=device).reshape(1, width)
    low = (u + v) <= limit
    return low, ~low


def _check_cutoff(cutoff: float):
    if not (0.0 < float(cutoff) < 1.0):
        raise ConfigError(f"Порог частот должен лежать в (0, 1), получено {cutoff}")


def _check_image(image: torch.Tensor):
    if image.dim() < 3 or image.shape[-3] != 3:
        raise InvalidInputError(f"Ожидается RGB-изображение (..., 3, H, W), получено {tuple(image.shape)}")
    if image.shape[-2] < MIN_IMAGE_SIDE or image.shape[-1] < MIN_IMAGE_SIDE:
        raise InvalidInputError(
            f"Изображение слишком маленькое: {tuple(image.shape[-2:])}, минимум {MIN_IMAGE_SIDE}×{MIN_IMAGE_SIDE}"
        )
    if not bool(torch.isfinite(image).all()):
        raise InvalidInputError("Во входном изображении есть NaN/Inf")


def split_frequencies(image: torch.Tensor, cutoff: float = DEFAULT_CUTOFF) -> FrequencyPair:
    """
    Разделяет изображение на высоко- и низкочастотные компоненты

    Глобальное DCT по каждому каналу, маскирование коэффициентов и обратное DCT.
    Компоненты не обрезаются до [0, 1]: high знакопеременна.

    Args:
        image: Тензор (..., 3, H, W)
        cutoff: Доля диагонального индекса для низких частот

    Returns:
        FrequencyPair того же типа, что и вход
    """
    _check_cutoff(cutoff)
    _check_image(image)
    h, w = image.shape[-2], image.shape[-1]
    low_mask, high_mask = frequency_masks(h, w, cutoff, device=image.device)

    d_h = create_dct_matrix(h, image.device)
    d_w = create_dct_matrix(w, image.device)
    coeffs = d_h @ image.to(torch.float64) @ d_w.t()
    low = d_h.t() @ (coeffs * low_mask) @ d_w
    high = d_h.t() @ (coeffs * high_mask) @ d_w
    return FrequencyPair(high=high.to(image.dtype), low=low.to(image.dtype))


def make_enhanced_inputs(
    image: torch.Tensor,
    cutoff: float = DEFAULT_CUTOFF,
    local_band: str = "high",
    global_band: str = "low",
    use_dct: bool = True
) -> EnhancedInput:
    """
    Собирает входы локального, глобального энкодеров и модуля весов

    Args:
        image: Тензор (..., 3, H, W)
        cutoff: Порог частот
        local_band: Полоса для локальной (свёрточной) ветви
        global_band: Полоса для глобальной (attention) ветви
        use_dct: Если False, частотные каналы заполняются нулями

    Returns:
        EnhancedInput с 6, 6 и 9 каналами
    """
    for band in (local_band, global_band):
        if band not in BANDS:
            raise ConfigError(f"Неизвестная частотная полоса: {band}")

    if use_dct:
        pair = split_frequencies(image, cutoff)
        high, low = pair.high, pair.low
        local_part, global_part = pair.band(local_band), pair.band(global_band)
    else:
        _check_image(image)
        high = low = local_part = global_part = torch.zeros_like(image)

    return EnhancedInput(
        local_input=torch.cat([image, local_part], dim=-3),
        global_input=torch.cat([image, global_part], dim=-3),
        weight_input=torch.cat([image, high, low], dim=-3)
    )
