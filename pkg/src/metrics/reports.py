"""
Сводные отчёты по метрикам и их сериализация (JSON, CSV)
"""
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.errors import ConfigError
from src.metrics.localization import (
    DEFAULT_THRESHOLD,
    prepare_arrays,
    auc,
    binarize,
    confusion_counts,
    f1_from_counts,
    iou_from_counts,
    permute_f1,
)

METRIC_NAMES = ("f1", "permute_f1", "iou", "auc")
AGGREGATIONS = ("per_image", "micro")


@dataclass
class ImageMetrics:
    """Метрики одного изображения; auc = None, если маска одноклассовая"""
    sample_id: str
    f1: float
    permute_f1: float
    iou: float
    auc: Optional[float]


@dataclass
class MetricsReport:
    """Метрики по изображениям и средние по набору"""
    threshold: float
    aggregation: str
    images: List[ImageMetrics] = field(default_factory=list)
    mean: Dict[str, Optional[float]] = field(default_factory=dict)
    auc_undefined: int = 0

    @property
    def sample_count(self) -> int:
        return len(self.images)

    def to_dict(self) -> Dict:
        return {
            "threshold": self.threshold,
            "aggregation": self.aggregation,
            "sample_count": self.sample_count,
            "auc_undefined": self.auc_undefined,
            "mean": self.mean,
            "images": [asdict(m) for m in self.images],
        }

    def write_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        return path

    def write_csv(self, path) -> Path:
        """Одна строка на изображение плюс строка mean"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["sample_id", *METRIC_NAMES])
            for m in self.images:
                writer.writerow([m.sample_id, m.f1, m.permute_f1, m.iou, "" if m.auc is None else m.auc])
            writer.writerow(["mean", *["" if self.mean.get(k) is None else self.mean[k] for k in METRIC_NAMES]])
        return path


def evaluate_predictions(
    items: Iterable[Tuple[str, np.ndarray, np.ndarray]],
    threshold: float = DEFAULT_THRESHOLD,
    aggregation: str = "per_image"
) -> MetricsReport:
    """
    Считает метрики по потоку (id, вероятности, маска)

    Args:
        items: Итерируемый набор предсказаний
        threshold: Порог бинаризации
        aggregation: per_image - среднее по изображениям; micro - F1/IoU по
            суммарным TP/FP/FN всех пикселей (AUC остаётся средним по изображениям)

    Returns:
        MetricsReport
    """
    if aggregation not in AGGREGATIONS:
        raise ConfigError(f"Неизвестная агрегация {aggregation}, ожидается одна из {AGGREGATIONS}")

    report = MetricsReport(threshold=threshold, aggregation=aggregation)
    totals = np.zeros(3, dtype=np.int64)
    inverted_totals = np.zeros(3, dtype=np.int64)

    for sample_id, prob, mask in items:
        pred, target = prepare_arrays(prob, mask)
        binary = binarize(pred, threshold)
        counts = confusion_counts(binary, target)
        inverted = confusion_counts(~binary, target)
        totals += counts
        inverted_totals += inverted
        area_under = auc(pred, target)
        if area_under is None:
            report.auc_undefined += 1
        report.images.append(ImageMetrics(
            sample_id=str(sample_id),
            f1=f1_from_counts(*counts),
            permute_f1=permute_f1(pred, target, threshold),
            iou=iou_from_counts(*counts),
            auc=area_under
        ))

    if not report.images:
        report.mean = {k: None for k in METRIC_NAMES}
        return report

    aucs = [m.auc for m in report.images if m.auc is not None]
    report.mean["auc"] = float(np.mean(aucs)) if aucs else None
    if aggregation == "per_image":
        for name in ("f1", "permute_f1", "iou"):
            report.mean[name] = float(np.mean([getattr(m, name) for m in report.images]))
    else:
        micro_f1 = f1_from_counts(*totals)
        report.mean["f1"] = micro_f1
        report.mean["permute_f1"] = max(micro_f1, f1_from_counts(*inverted_totals))
        report.mean["iou"] = iou_from_counts(*totals)
    return report
