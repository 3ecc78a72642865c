"""
Состояние обучения и его сохранение/восстановление
"""
from dataclasses import dataclass, field
from typing import List, Optional

import torch

from src.errors import CheckpointError
from src.model.checkpoint import read_checkpoint, write_checkpoint
from src.model.config import MesorchConfig
from src.model.mesorch import MesorchNet
from src.training.optim import TrainConfig, make_optimizer


@dataclass
class TrainState:
    """Модель, оптимизатор и прогресс обучения"""
    model: MesorchNet
    optimizer: torch.optim.Optimizer
    config: TrainConfig
    step: int = 0
    epoch: int = 0
    loss_trace: List[List[float]] = field(default_factory=list)
    rng_state: Optional[torch.Tensor] = None

    @classmethod
    def fresh(cls, model: MesorchNet, config: TrainConfig) -> "TrainState":
        return cls(model=model, optimizer=make_optimizer(model, config), config=config)


def save_checkpoint(state: TrainState, path) -> None:
    """Пишет модель, моменты AdamW, трассу лосса и состояние RNG"""
    write_checkpoint(
        path,
        state.model,
        step=state.step,
        epoch=state.epoch,
        seed=state.config.seed,
        optimizer=state.optimizer,
        loss_trace=state.loss_trace,
        rng_state=state.rng_state if state.rng_state is not None else torch.get_rng_state(),
        extra={"train_config": state.config.model_dump(mode="json")}
    )


def load_checkpoint(path, config: Optional[TrainConfig] = None,
                    expected_config: Optional[MesorchConfig] = None) -> TrainState:
    """
    Восстанавливает TrainState для продолжения обучения

    Args:
        path: Каталог чекпоинта
        config: TrainConfig; по умолчанию берётся из чекпоинта
        expected_config: Если задан, хеш конфигурации модели обязан совпасть

    Returns:
        TrainState
    """
    data = read_checkpoint(path, expected_config)
    if config is None:
        stored = data.manifest.get("extra", {}).get("train_config")
        if stored is None:
            raise CheckpointError(f"В чекпоинте {path} нет train_config, передайте его явно")
        config = TrainConfig(**stored)

    model = data.model.train()
    optimizer = make_optimizer(model, config)
    params = dict(model.named_parameters())
    for name, moments in data.optimizer_state.items():
        if name not in params:
            raise CheckpointError(f"Моменты оптимизатора для неизвестного параметра {name}")
        optimizer.state[params[name]] = {
            "step": moments["step"].clone(),
            "exp_avg": moments["exp_avg"].clone(),
            "exp_avg_sq": moments["exp_avg_sq"].clone(),
        }

    return TrainState(
        model=model,
        optimizer=optimizer,
        config=config,
        step=data.step,
        epoch=data.epoch,
        loss_trace=data.loss_trace,
        rng_state=data.rng_state
    )
