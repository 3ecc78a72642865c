"""
Инференс модели по сплиту датасета и сбор метрик
"""
from typing import Iterator, Optional, Tuple

import numpy as np
import torch

from src.metrics.localization import DEFAULT_THRESHOLD
from src.metrics.reports import MetricsReport, evaluate_predictions
from src.synthdata.dataset_store import TamperDataset
from utils.logger import app_logger, progress


@torch.no_grad()
def predict_probabilities(model: torch.nn.Module, images: torch.Tensor) -> torch.Tensor:
    """B×3×H×W -> вероятности B×1×H×W"""
    model.eval()
    return model(images).final.probability


def _iter_predictions(model, dataset: TamperDataset, batch_size: int
                      ) -> Iterator[Tuple[str, np.ndarray, np.ndarray]]:
    indices = list(range(len(dataset)))
    for start in progress(range(0, len(indices), batch_size), desc=f"Оценка {dataset.split}", leave=False):
        batch = indices[start:start + batch_size]
        images, masks = zip(*(dataset[i] for i in batch))
        probs = predict_probabilities(model, torch.stack(images)).cpu().numpy()
        for i, prob, mask in zip(batch, probs, masks):
            yield dataset.sample_id(i), prob[0], mask[0].numpy()


def evaluate_model(
    model: torch.nn.Module,
    dataset: TamperDataset,
    threshold: float = DEFAULT_THRESHOLD,
    aggregation: str = "per_image",
    batch_size: int = 8
) -> MetricsReport:
    """
    Считает F1, permute-F1, IoU и AUC модели на сплите

    Args:
        model: Обученная MesorchNet
        dataset: Сплит (искажение задаётся в самом датасете)
        threshold: Порог бинаризации
        aggregation: per_image или micro
        batch_size: Размер батча инференса

    Returns:
        MetricsReport
    """
    report = evaluate_predictions(_iter_predictions(model, dataset, batch_size), threshold, aggregation)
    app_logger.info(
        f"Оценка {dataset.split} [{dataset.perturbation.label}]: n={report.sample_count}, "
        f"F1={_fmt(report.mean.get('f1'))}, IoU={_fmt(report.mean.get('iou'))}, "
        f"AUC={_fmt(report.mean.get('auc'))}"
    )
    return report


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"
