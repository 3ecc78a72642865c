"""
Прогон устойчивости: None плюс 3 вида искажений × 6 уровней
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from src.errors import InvalidInputError
from src.metrics.evaluator import evaluate_model
from src.metrics.localization import DEFAULT_THRESHOLD
from src.metrics.reports import METRIC_NAMES, MetricsReport
from src.synthdata.dataset_store import TamperDataset
from src.synthdata.perturbations import PERTURB_GRID, PerturbSpec, robustness_grid
from utils.logger import app_logger


@dataclass
class RobustnessCell:
    spec: PerturbSpec
    report: MetricsReport

    @property
    def f1(self) -> float:
        return self.report.mean["f1"]


@dataclass
class RobustnessReport:
    model_name: str
    dataset_name: str
    cells: List[RobustnessCell] = field(default_factory=list)

    @property
    def baseline_f1(self) -> float:
        return next(c.f1 for c in self.cells if c.spec.kind == "none")

    def kind_f1(self, kind: str) -> Dict[int, float]:
        return {c.spec.level: c.f1 for c in self.cells if c.spec.kind == kind}

    def average_f1(self, kind: str, include_none: bool = False) -> float:
        """Среднее F1 по шести уровням; include_none добавляет ячейку None"""
        values = list(self.kind_f1(kind).values())
        if include_none:
            values.append(self.baseline_f1)
        return float(np.mean(values))

    def write_cells_csv(self, path) -> Path:
        """Плоская строка на (модель, датасет, искажение, уровень)"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["model", "dataset", "perturbation", "level", *METRIC_NAMES])
            for cell in self.cells:
                means = ["" if cell.report.mean.get(k) is None else cell.report.mean[k] for k in METRIC_NAMES]
                level = "" if cell.spec.level is None else cell.spec.level
                writer.writerow([self.model_name, self.dataset_name, cell.spec.kind, level, *means])
        return path

    def write_table_csv(self, path) -> Path:
        """Строка на вид искажения: None, шесть уровней и оба варианта Avg.F1"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["perturbation", "none", "level_1", "level_2", "level_3", "level_4", "level_5",
                             "level_6", "avg_f1_perturbed", "avg_f1_with_none", "levels"])
            for kind, levels in PERTURB_GRID.items():
                by_level = self.kind_f1(kind)
                writer.writerow([
                    kind,
                    self.baseline_f1,
                    *[by_level[level] for level in levels],
                    self.average_f1(kind),
                    self.average_f1(kind, include_none=True),
                    "/".join(str(level) for level in levels),
                ])
        return path


def run_robustness(
    model: torch.nn.Module,
    data_root,
    split: str = "test",
    input_size=None,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    model_name: str = "mesorch",
    specs: Optional[List[PerturbSpec]] = None
) -> RobustnessReport:
    """
    Оценивает модель на каждой точке сетки искажений

    Args:
        model: Модель
        data_root: Корень датасета
        split: Сплит
        input_size: (H, W) модели
        threshold: Порог бинаризации
        seed: Зерно шума
        model_name: Имя модели для CSV
        specs: Сетка (по умолчанию полная, 19 ячеек)

    Returns:
        RobustnessReport
    """
    if len(TamperDataset(data_root, split, input_size=input_size)) == 0:
        raise InvalidInputError(f"Сплит {split} в {data_root} пуст, прогон устойчивости невозможен")
    specs = specs or robustness_grid()
    report = RobustnessReport(model_name=model_name, dataset_name=f"{Path(data_root).name}/{split}")
    for spec in specs:
        dataset = TamperDataset(data_root, split, input_size=input_size, perturbation=spec, seed=seed)
        report.cells.append(RobustnessCell(spec, evaluate_model(model, dataset, threshold)))
    app_logger.info(f"Прогон устойчивости завершён: {len(report.cells)} ячеек, базовый F1={report.baseline_f1:.4f}")
    return report
