"""
Тесты пиксельных метрик и отчётов
"""
import csv
import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import ConfigError, InvalidInputError
from src.metrics import auc, evaluate_predictions, iou, permute_f1, pixel_f1
from src.metrics.reports import MetricsReport
from src.metrics.robustness import RobustnessCell, RobustnessReport
from src.synthdata.perturbations import PERTURB_GRID, robustness_grid


@pytest.fixture
def half_overlap():
    """4×4: маска - левая половина, предсказание - верхняя"""
    mask = np.zeros((4, 4), dtype=bool)
    mask[:, :2] = True
    pred = np.zeros((4, 4))
    pred[:2, :] = 1.0
    return pred, mask


class TestPixelMetrics:
    """Тесты F1, permute-F1, IoU"""

    def test_perfect_and_inverted(self, half_overlap):
        _, mask = half_overlap
        assert pixel_f1(mask.astype(float), mask) == 1.0
        assert pixel_f1((~mask).astype(float), mask) == 0.0
        assert iou(mask.astype(float), mask) == 1.0

    def test_half_overlap(self, half_overlap):
        pred, mask = half_overlap
        assert pixel_f1(pred, mask) == pytest.approx(0.5), "TP=4, FP=4, FN=4 -> F1 = 0.5"
        assert iou(pred, mask) == pytest.approx(1.0 / 3.0), "IoU = 4/12"
        assert permute_f1(pred, mask) == pytest.approx(0.5)

    def test_permute_recovers_inversion(self, half_overlap):
        _, mask = half_overlap
        assert permute_f1((~mask).astype(float), mask) == 1.0
        assert permute_f1(mask.astype(float), mask) == pixel_f1(mask.astype(float), mask)

    def test_threshold_is_inclusive(self):
        mask = np.array([[1, 0]])
        assert pixel_f1(np.array([[0.5, 0.49]]), mask) == 1.0

    def test_empty_mask_and_empty_prediction(self):
        mask = np.zeros((3, 3))
        assert pixel_f1(np.zeros((3, 3)), mask) == 1.0
        assert iou(np.zeros((3, 3)), mask) == 1.0

    def test_iou_follows_from_f1(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            pred = rng.random((8, 8))
            mask = rng.random((8, 8)) > 0.6
            f1 = pixel_f1(pred, mask)
            assert abs(iou(pred, mask) - f1 / (2.0 - f1)) < 1e-9, "IoU = F1 / (2 - F1)"
            assert permute_f1(pred, mask) >= f1

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            pixel_f1(np.zeros((4, 4)), np.zeros((4, 5)))


class TestAuc:
    """Тесты AUC"""

    def test_perfect_order(self):
        assert auc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([1, 1, 0, 0])) == 1.0

    def test_constant_prediction(self):
        assert auc(np.full(6, 0.5), np.array([1, 0, 1, 0, 0, 1])) == pytest.approx(0.5)

    def test_six_pixel_case(self):
        probs = np.array([0.9, 0.8, 0.4, 0.7, 0.3, 0.1])
        labels = np.array([1, 1, 1, 0, 0, 0])
        assert auc(probs, labels) == pytest.approx(8.0 / 9.0), "8 из 9 пар упорядочены верно"

    def test_single_class_is_undefined(self):
        assert auc(np.random.rand(4, 4), np.zeros((4, 4))) is None
        assert auc(np.random.rand(4, 4), np.ones((4, 4))) is None


class TestReports:
    """Тесты агрегации и сериализации"""

    def test_per_image_and_micro(self, half_overlap):
        pred, mask = half_overlap
        small = np.zeros((4, 4), dtype=bool)
        small[0, :2] = True
        items = [("a", pred, mask), ("b", small.astype(float), small)]
        per_image = evaluate_predictions(items, aggregation="per_image")
        micro = evaluate_predictions(items, aggregation="micro")
        assert per_image.mean["f1"] == pytest.approx(0.75)
        assert micro.mean["f1"] == pytest.approx(12.0 / 20.0), "Micro F1 по суммарным TP/FP/FN"
        assert micro.mean["iou"] == pytest.approx(6.0 / 14.0)
        assert per_image.sample_count == 2

    def test_undefined_auc_counted(self):
        empty = np.zeros((4, 4))
        items = [("x", np.random.rand(4, 4), empty), ("y", np.random.rand(4, 4), empty)]
        report = evaluate_predictions(items)
        assert report.auc_undefined == 2
        assert report.mean["auc"] is None

    def test_empty_stream(self):
        report = evaluate_predictions([])
        assert report.sample_count == 0
        assert report.mean["f1"] is None

    def test_unknown_aggregation(self):
        with pytest.raises(ConfigError):
            evaluate_predictions([], aggregation="macro")

    def test_json_and_csv(self, tmp_path, half_overlap):
        pred, mask = half_overlap
        report = evaluate_predictions([("a", pred, mask), ("b", pred, mask)])
        report.write_json(tmp_path / "metrics.json")
        report.write_csv(tmp_path / "metrics.csv")
        with open(tmp_path / "metrics.json", encoding="utf-8") as f:
            data = json.load(f)
        assert data["sample_count"] == 2
        with open(tmp_path / "metrics.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["sample_id", "f1", "permute_f1", "iou", "auc"]
        assert len(rows) == 4, "Заголовок, два изображения и строка mean"
        assert rows[-1][0] == "mean"


class TestRobustnessReport:
    """Тесты таблицы устойчивости"""

    @pytest.fixture
    def report(self):
        cells = []
        for spec in robustness_grid():
            f1 = 0.9 if spec.kind == "none" else 0.9 - 0.1 * (PERTURB_GRID[spec.kind].index(spec.level) + 1)
            cells.append(RobustnessCell(spec, MetricsReport(threshold=0.5, aggregation="per_image",
                                                            mean={"f1": f1, "permute_f1": f1,
                                                                  "iou": f1, "auc": None})))
        return RobustnessReport(model_name="toy", dataset_name="synthetic/test", cells=cells)

    def test_grid_size(self, report):
        assert len(report.cells) == 19, "None плюс 3 × 6 уровней"
        assert report.baseline_f1 == 0.9

    def test_both_averages(self, report):
        perturbed = np.mean([0.9 - 0.1 * i for i in range(1, 7)])
        assert report.average_f1("jpeg") == pytest.approx(perturbed)
        assert report.average_f1("jpeg", include_none=True) == pytest.approx((perturbed * 6 + 0.9) / 7)

    def test_table_csv(self, tmp_path, report):
        report.write_table_csv(tmp_path / "table.csv")
        report.write_cells_csv(tmp_path / "cells.csv")
        with open(tmp_path / "table.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert [r[0] for r in rows[1:]] == ["gauss_noise", "gauss_blur", "jpeg"]
        with open(tmp_path / "cells.csv", newline="", encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 20
        print("✅ Тесты отчётов пройдены")
