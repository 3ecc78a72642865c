"""
Пиксельные метрики локализации: F1, permute-F1, IoU, AUC
"""
from typing import Optional, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score

from src.errors import InvalidInputError

DEFAULT_THRESHOLD = 0.5


def prepare_arrays(pred_prob, mask) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred_prob, dtype=np.float64)
    target = np.asarray(mask)
    pred = np.squeeze(pred)
    target = np.squeeze(target)
    if pred.shape != target.shape:
        raise InvalidInputError(f"Формы предсказания {pred.shape} и маски {target.shape} не совпадают")
    return pred, target.astype(bool)


def binarize(pred_prob, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Пиксель считается подделанным, если вероятность >= порога"""
    return np.asarray(pred_prob, dtype=np.float64) >= threshold


def confusion_counts(pred_binary: np.ndarray, target: np.ndarray) -> Tuple[int, int, int]:
    """TP, FP, FN для бинарных карт"""
    tp = int(np.count_nonzero(pred_binary & target))
    fp = int(np.count_nonzero(pred_binary & ~target))
    fn = int(np.count_nonzero(~pred_binary & target))
    return tp, fp, fn


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    # обе карты пустые - идеальное совпадение
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def iou_from_counts(tp: int, fp: int, fn: int) -> float:
    if tp + fp + fn == 0:
        return 1.0
    return tp / float(tp + fp + fn)


def pixel_f1(pred_prob, mask, threshold: float = DEFAULT_THRESHOLD) -> float:
    """
    Пиксельный F1 при пороге 0.5

    Args:
        pred_prob: Вероятности H×W
        mask: Бинарная маска H×W
        threshold: Порог бинаризации

    Returns:
        2TP / (2TP + FP + FN)
    """
    pred, target = prepare_arrays(pred_prob, mask)
    return f1_from_counts(*confusion_counts(binarize(pred, threshold), target))


def permute_f1(pred_prob, mask, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Максимум F1 по исходной и инвертированной разметке предсказания"""
    pred, target = prepare_arrays(pred_prob, mask)
    binary = binarize(pred, threshold)
    direct = f1_from_counts(*confusion_counts(binary, target))
    inverted = f1_from_counts(*confusion_counts(~binary, target))
    return max(direct, inverted)


def iou(pred_prob, mask, threshold: float = DEFAULT_THRESHOLD) -> float:
    """TP / (TP + FP + FN)"""
    pred, target = prepare_arrays(pred_prob, mask)
    return iou_from_counts(*confusion_counts(binarize(pred, threshold), target))


def auc(pred_prob, mask) -> Optional[float]:
    """
    Площадь под ROC-кривой без порога

    Returns:
        AUC или None, если в маске только один класс
    """
    pred, target = prepare_arrays(pred_prob, mask)
    labels = target.ravel()
    if labels.all() or not labels.any():
        return None
    return float(roc_auc_score(labels, pred.ravel()))
