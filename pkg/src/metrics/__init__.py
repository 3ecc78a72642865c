"""
Метрики локализации и учёт стоимости модели
"""
from src.metrics.cost import CostReport, count_cost, count_model_cost, count_module_cost
from src.metrics.localization import DEFAULT_THRESHOLD, auc, binarize, iou, permute_f1, pixel_f1
from src.metrics.reports import AGGREGATIONS, METRIC_NAMES, ImageMetrics, MetricsReport, evaluate_predictions
