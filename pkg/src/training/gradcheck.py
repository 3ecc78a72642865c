"""
Проверка градиентов центральными конечными разностями в float64
"""
import copy
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import torch

from src.model.config import MesorchConfig, toy_model_config
from src.training.losses import mask_bce_loss
from utils.logger import app_logger


@dataclass
class GradCheckResult:
    checked: int
    passed: int
    failures: List[Tuple[str, int, float, float]] = field(default_factory=list)

    @property
    def pass_fraction(self) -> float:
        return self.passed / self.checked if self.checked else 1.0


def gradcheck_model_config(**overrides) -> MesorchConfig:
    """Минимальная конфигурация (< 10k параметров) на входе 32×32"""
    values = dict(
        input_size=(32, 32),
        local_channels=[4, 4, 8, 8],
        local_depths=[1, 1, 1, 1],
        conv_expansion=1,
        global_channels=[4, 4, 8, 8],
        global_depths=[1, 1, 1, 1],
        num_heads=[1, 1, 1, 1],
        sr_ratios=[2, 1, 1, 1],
        mlp_ratio=1,
        decoder_width=4,
        weighting_hidden=4,
    )
    values.update(overrides)
    return toy_model_config(**values)


def _loss(model, images, masks) -> float:
    with torch.no_grad():
        return mask_bce_loss(model(images).final.full, masks).item()


def finite_difference_check(
    model: torch.nn.Module,
    images: torch.Tensor,
    masks: torch.Tensor,
    num_coords: int = 500,
    h: float = 1e-3,
    rtol: float = 1e-3,
    atol: float = 1e-9,
    seed: int = 0
) -> GradCheckResult:
    """
    Сравнивает градиент autograd с (L(θ+h) − L(θ−h)) / 2h на случайных координатах

    Args:
        model: Модель (проверяется её float64-копия)
        images: B×3×H×W
        masks: B×1×H×W
        num_coords: Число проверяемых координат
        h: Шаг разности
        rtol: Допустимая относительная ошибка
        atol: Абсолютный порог для почти нулевых градиентов
        seed: Зерно выбора координат

    Returns:
        GradCheckResult
    """
    model = copy.deepcopy(model).double().eval()
    images, masks = images.double(), masks.double()

    model.zero_grad(set_to_none=True)
    mask_bce_loss(model(images).final.full, masks).backward()

    named = [(n, p) for n, p in model.named_parameters() if p.requires_grad]
    sizes = np.array([p.numel() for _, p in named])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    coords = rng.choice(offsets[-1], size=min(num_coords, int(offsets[-1])), replace=False)

    result = GradCheckResult(checked=len(coords), passed=0)
    for coord in coords:
        which = int(np.searchsorted(offsets, coord, side="right") - 1)
        name, param = named[which]
        local = int(coord - offsets[which])
        flat = param.data.view(-1)
        analytic = float(param.grad.view(-1)[local]) if param.grad is not None else 0.0

        original = flat[local].item()
        flat[local] = original + h
        plus = _loss(model, images, masks)
        flat[local] = original - h
        minus = _loss(model, images, masks)
        flat[local] = original
        numeric = (plus - minus) / (2 * h)

        error = abs(analytic - numeric)
        if error <= atol or error / max(abs(analytic), abs(numeric)) < rtol:
            result.passed += 1
        else:
            result.failures.append((name, local, analytic, numeric))

    app_logger.info(
        f"Проверка градиентов: {result.passed}/{result.checked} координат в допуске rtol={rtol}"
    )
    return result
