"""
Прунинг ветвей по средним адаптивным весам
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import torch
from pydantic import BaseModel, ConfigDict, field_validator
from torch.utils.data import DataLoader, Dataset

from src.errors import InvalidInputError, NotApplicableError
from src.metrics.cost import count_model_cost
from src.model.config import NUM_BRANCHES, MesorchConfig
from src.model.mesorch import MesorchNet
from src.model.outputs import WeightMap
from src.training.optim import TrainConfig
from src.training.trainer import train_loop
from utils.logger import app_logger


class PruneConfig(BaseModel):
    """epsilon = None означает 0.5/K для текущего числа ветвей K"""
    model_config = ConfigDict(extra="forbid")

    epsilon: Optional[float] = None
    min_surviving_branches: int = 1
    retain_weighting: bool = True
    finetune_epochs: int = 5
    batch_size: int = 8

    @field_validator("epsilon")
    @classmethod
    def _epsilon_range(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"epsilon должен лежать в [0, 1], получено {value}")
        return value

    @field_validator("min_surviving_branches")
    @classmethod
    def _surviving_range(cls, value: int) -> int:
        if not 1 <= value <= NUM_BRANCHES:
            raise ValueError(f"min_surviving_branches должен лежать в [1, {NUM_BRANCHES}]")
        return value

    def resolve_epsilon(self, num_branches: int) -> float:
        return self.epsilon if self.epsilon is not None else 0.5 / num_branches


@dataclass
class PruneReport:
    epsilon: float
    mean_weights: Dict[int, float]
    pixel_count: int
    pruned_branches: List[int]
    surviving_branches: List[int]
    guard_engaged: bool
    retain_weighting: bool
    params_before: int = 0
    params_after: int = 0
    flops_before: int = 0
    flops_after: int = 0
    extra: Dict = field(default_factory=dict)

    @property
    def param_delta(self) -> int:
        return self.params_before - self.params_after

    @property
    def flop_delta(self) -> int:
        return self.flops_before - self.flops_after

    def to_dict(self) -> Dict:
        payload = asdict(self)
        payload["mean_weights"] = {str(b): w for b, w in self.mean_weights.items()}
        payload["param_delta"] = self.param_delta
        payload["flop_delta"] = self.flop_delta
        return payload

    def write_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        return path


def mean_weights_from_maps(branches: List[int], weight_maps: Iterable[WeightMap]) -> Tuple[Dict[int, float], int]:
    """
    W̄_i = (1/N)·Σ_n W_{i,n} по всем пикселям всех карт

    Returns:
        (словарь ветвь -> средний вес, N)
    """
    total = torch.zeros(len(branches), dtype=torch.float64)
    pixels = 0
    for weight_map in weight_maps:
        w = weight_map.weights.detach().to(torch.float64)
        if w.shape[1] != len(branches):
            raise InvalidInputError(f"Карта весов на {w.shape[1]} ветвей, ожидалось {len(branches)}")
        total += w.sum(dim=(0, 2, 3)).cpu()
        pixels += w.shape[0] * w.shape[2] * w.shape[3]
    if pixels == 0:
        raise InvalidInputError("Пустой калибровочный набор")
    means = (total / pixels).tolist()
    return dict(zip(branches, means)), pixels


@torch.no_grad()
def mean_scale_weights(model: MesorchNet, calibration_set: Dataset, batch_size: int = 8) -> Tuple[Dict[int, float], int]:
    """
    Средние веса ветвей на калибровочном наборе

    Args:
        model: Модель в режиме adaptive
        calibration_set: Датасет пар (изображение, маска)
        batch_size: Размер батча

    Returns:
        (ветвь -> W̄_i, число пикселей N)
    """
    if model.config.fusion_mode != "adaptive":
        raise NotApplicableError("Средние веса определены только для адаптивного слияния")
    if len(calibration_set) == 0:
        raise InvalidInputError("Пустой калибровочный набор")
    model.eval()
    loader = DataLoader(calibration_set, batch_size=batch_size, shuffle=False)

    def weight_maps():
        for images, _ in loader:
            yield model.adaptive_weights(model.enhance(images).weight_input)

    return mean_weights_from_maps(model.active_branches, weight_maps())


def select_pruned(mean_weights: Dict[int, float], epsilon: float,
                  min_surviving: int = 1) -> Tuple[List[int], List[int], bool]:
    """
    Условие прунинга W̄_i < ε с защитой от удаления всех ветвей

    Returns:
        (удаляемые, оставшиеся, сработала ли защита)
    """
    surviving = [b for b, w in sorted(mean_weights.items()) if w >= epsilon]
    guard = False
    if len(surviving) < min_surviving:
        guard = True
        ranked = sorted(mean_weights, key=lambda b: (-mean_weights[b], b))
        surviving = sorted(ranked[:min(min_surviving, len(ranked))])
    pruned = sorted(b for b in mean_weights if b not in surviving)
    return pruned, surviving, guard


def build_pruned_model(model: MesorchNet, surviving: List[int],
                       frozen_weights: Optional[List[float]] = None) -> MesorchNet:
    """
    Новая сеть только с оставшимися ветвями; веса копируются по именам

    Голова модуля весов сужается до строк оставшихся ветвей. С frozen_weights
    модуль весов удаляется и слияние идёт с постоянными весами.
    """
    updates = {"active_branches": surviving, "frozen_branch_weights": frozen_weights}
    config = MesorchConfig(**{**model.config.model_dump(), **updates})
    pruned = MesorchNet(config)

    old_state = model.state_dict()
    rows = torch.tensor([model.active_branches.index(b) for b in surviving])
    new_state = {}
    for name, tensor in pruned.state_dict().items():
        if name in ("weighting.head.weight", "weighting.head.bias"):
            new_state[name] = old_state[name].index_select(0, rows).clone()
        elif name == "frozen_weights":
            new_state[name] = tensor
        else:
            new_state[name] = old_state[name].clone()
    pruned.load_state_dict(new_state)
    return pruned


def prune(model: MesorchNet, calibration_set: Dataset,
          config: Optional[PruneConfig] = None) -> Tuple[MesorchNet, PruneReport]:
    """
    Удаляет ветви с W̄_i < ε

    Args:
        model: Обученная модель в режиме adaptive
        calibration_set: Калибровочный сплит
        config: PruneConfig

    Returns:
        (модель после прунинга, PruneReport)
    """
    config = config or PruneConfig()
    epsilon = config.resolve_epsilon(model.config.num_branches)
    means, pixels = mean_scale_weights(model, calibration_set, config.batch_size)
    pruned_ids, surviving, guard = select_pruned(means, epsilon, config.min_surviving_branches)
    if guard:
        app_logger.warning(
            f"ε={epsilon:.4f} удалил бы слишком много ветвей, оставлены {surviving} (min_surviving_branches)"
        )

    frozen = None
    if not config.retain_weighting or model.weighting is None:
        kept = [means[b] for b in surviving]
        frozen = [w / sum(kept) for w in kept]

    if pruned_ids or frozen is not None:
        pruned_model = build_pruned_model(model, surviving, frozen)
    else:
        pruned_model = model

    before = count_model_cost(model)
    after = count_model_cost(pruned_model)
    report = PruneReport(
        epsilon=epsilon,
        mean_weights=means,
        pixel_count=pixels,
        pruned_branches=pruned_ids,
        surviving_branches=surviving,
        guard_engaged=guard,
        retain_weighting=config.retain_weighting,
        params_before=before.params,
        params_after=after.params,
        flops_before=before.flops,
        flops_after=after.flops,
    )
    app_logger.info(
        f"Прунинг ε={epsilon:.4f}: удалено {pruned_ids}, осталось K={len(surviving)}, "
        f"параметры {before.params} -> {after.params}, FLOPs {before.flops} -> {after.flops}"
    )
    return pruned_model, report


def renormalize_and_finetune(model: MesorchNet, dataset: Dataset, train_config: TrainConfig,
                             out_dir=None) -> MesorchNet:
    """
    Дообучение модели после прунинга; голова весов уже выдаёт K-way softmax

    Raises:
        NotApplicableError: если у модели все 8 ветвей
    """
    if model.config.num_branches == NUM_BRANCHES:
        raise NotApplicableError("Модель не прунилась: все 8 ветвей на месте")
    app_logger.info(f"Дообучение после прунинга: K={model.config.num_branches}, эпох={train_config.epochs}")
    state = train_loop(model, dataset, train_config, out_dir=out_dir, run_name="finetune")
    return state.model
