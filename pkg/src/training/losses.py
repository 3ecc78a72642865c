"""
Функция потерь: попиксельная бинарная кросс-энтропия в пространстве логитов
"""
import torch
import torch.nn.functional as F

from src.errors import InvalidInputError


def mask_bce_loss(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """
    Средняя BCE между логитами P_final и маской

    Args:
        logits: B×1×H×W (или H×W) логиты
        mask: Маска той же формы, 1 = подделка

    Returns:
        Скаляр
    """
    if logits.shape != mask.shape:
        raise InvalidInputError(f"Формы логитов {tuple(logits.shape)} и маски {tuple(mask.shape)} не совпадают")
    return F.binary_cross_entropy_with_logits(logits, mask.to(logits.dtype), reduction="mean")
