"""
Прунинг ветвей Mesorch по средним весам
"""
from src.pruning.pruner import (
    PruneConfig,
    PruneReport,
    build_pruned_model,
    mean_scale_weights,
    mean_weights_from_maps,
    prune,
    renormalize_and_finetune,
    select_pruned,
)
