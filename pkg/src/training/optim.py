"""
Параметры обучения и оптимизатор AdamW
"""
from typing import List, Tuple

import torch
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class TrainConfig(BaseModel):
    """Рецепт обучения; batch_size - размер микро-батча"""
    model_config = ConfigDict(extra="forbid")

    epochs: int = 30
    batch_size: int = 8
    accumulation_steps: int = 2
    lr_max: float = 1e-4
    lr_min: float = 5e-7
    warmup_epochs: float = 2
    weight_decay: float = 0.05
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    input_size: Tuple[int, int] = (64, 64)
    deterministic: bool = True
    checkpoint_every: int = 1

    @field_validator("epochs", "batch_size", "accumulation_steps", "checkpoint_every")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"значение должно быть >= 1, получено {value}")
        return value

    @model_validator(mode="after")
    def _check_rates(self) -> "TrainConfig":
        if not 0 <= self.lr_min < self.lr_max:
            raise ValueError(f"нужно 0 <= lr_min < lr_max, получено {self.lr_min}, {self.lr_max}")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError(f"warmup_epochs должен лежать в [0, epochs], получено {self.warmup_epochs}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay не может быть отрицательным")
        return self


def param_groups(model: torch.nn.Module, weight_decay: float) -> List[dict]:
    """Затухание весов для матриц и свёрток; смещения и масштабы нормализаций без него"""
    decay, no_decay = [], []
    for _, param in model.named_parameters():
        if not param.requires_grad:
            continue
        (no_decay if param.ndim <= 1 else decay).append(param)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def make_optimizer(model: torch.nn.Module, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        param_groups(model, config.weight_decay),
        lr=config.lr_max,
        betas=tuple(config.betas),
        eps=config.eps
    )


def set_lr(optimizer: torch.optim.Optimizer, lr: float):
    for group in optimizer.param_groups:
        group["lr"] = lr
