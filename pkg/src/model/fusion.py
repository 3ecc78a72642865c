"""
Слияние помасштабных предсказаний в итоговую маску
"""
from typing import Optional

import torch
import torch.nn.functional as F

from src.errors import InvalidInputError
from src.model.outputs import FinalPrediction, PredictionSet, WeightMap


def fuse(preds: PredictionSet, weights: Optional[WeightMap], height: int, width: int) -> FinalPrediction:
    """
    Складывает логиты ветвей и растягивает результат до H×W

    Args:
        preds: Логиты ветвей
        weights: None - равномерная сумма; иначе взвешенная сумма по пикселям
        height: Высота исходного изображения
        width: Ширина исходного изображения

    Returns:
        FinalPrediction с P_summed и P_final
    """
    maps = [preds.maps[b] for b in preds.branches]
    if not maps:
        raise InvalidInputError("Нет ни одного предсказания для слияния")
    reference = maps[0].shape
    for branch, p in zip(preds.branches, maps):
        if p.shape != reference or p.shape[1] != 1:
            raise InvalidInputError(
                f"Предсказание ветви {branch} имеет форму {tuple(p.shape)}, ожидалась {tuple(reference)}"
            )
    p_all = torch.cat(maps, dim=1)

    if weights is None:
        summed = p_all.sum(dim=1, keepdim=True)
    else:
        w = weights.weights
        if w.dim() == 4 and w.shape[0] == 1 and p_all.shape[0] > 1:
            w = w.expand(p_all.shape[0], -1, -1, -1)
        if w.shape != p_all.shape:
            raise InvalidInputError(
                f"Веса {tuple(w.shape)} не совпадают с предсказаниями {tuple(p_all.shape)}"
            )
        summed = (w * p_all).sum(dim=1, keepdim=True)

    if tuple(summed.shape[-2:]) == (height, width):
        full = summed
    else:
        full = F.interpolate(summed, size=(height, width), mode="bilinear", align_corners=False)
    return FinalPrediction(summed=summed, full=full)
