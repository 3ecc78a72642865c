"""
Модуль архитектуры Mesorch
"""
from src.model.config import (
    ALL_BRANCHES,
    ABLATION_BRANCHES,
    MesorchConfig,
    NUM_BRANCHES,
    NUM_SCALES,
    branch_family,
    branch_name,
    branch_scale,
    paper_model_config,
    toy_model_config,
)
from src.model.fusion import fuse
from src.model.mesorch import MesorchNet, build_model
from src.model.outputs import FinalPrediction, MesorchOutput, PredictionSet, ScalePyramid, WeightMap
