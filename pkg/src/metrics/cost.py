"""
Подсчёт параметров и FLOPs одного прямого прохода (batch 1)

FLOPs = 2 × умножений-сложений. Учитываются Conv2d, Linear и матричные
произведения внимания; нормализации, активации и интерполяция не учитываются.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from src.model.config import MesorchConfig
from src.model.encoders import EfficientAttention
from src.model.mesorch import MesorchNet
from utils.logger import app_logger

COMPONENTS = ("local_encoder", "global_encoder", "decoders", "weighting")


@dataclass
class CostReport:
    """Параметры и FLOPs при заданном размере входа"""
    params: int
    flops: int
    input_size: Tuple[int, ...]
    breakdown: Dict[str, Dict[str, int]] = field(default_factory=dict)

    @property
    def gflops(self) -> float:
        return self.flops / 1e9

    def to_dict(self) -> Dict:
        return {
            "params": self.params,
            "flops": self.flops,
            "gflops": round(self.gflops, 6),
            "input_size": list(self.input_size),
            "breakdown": self.breakdown,
        }

    def write_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        return path


def conv_flops(module: nn.Conv2d, output: torch.Tensor) -> int:
    kh, kw = module.kernel_size
    per_position = 2 * (module.in_channels // module.groups) * kh * kw * module.out_channels
    return per_position * output.shape[0] * output.shape[-2] * output.shape[-1]


def linear_flops(module: nn.Linear, output: torch.Tensor) -> int:
    positions = output.numel() // module.out_features
    return 2 * module.in_features * module.out_features * positions


class _FlopCounter:
    """Форвард-хуки на листовых слоях; FLOPs копятся по компонентам"""

    def __init__(self, model: nn.Module, components: Optional[Sequence[str]] = None):
        self.totals: Dict[str, int] = {}
        self.handles = []
        for name, module in model.named_modules():
            component = self._component_of(name, components)
            if isinstance(module, nn.Conv2d):
                self.handles.append(module.register_forward_hook(self._hook(component, conv_flops)))
            elif isinstance(module, nn.Linear):
                self.handles.append(module.register_forward_hook(self._hook(component, linear_flops)))
            elif isinstance(module, EfficientAttention):
                self.handles.append(module.register_forward_hook(self._attention_hook(component)))

    @staticmethod
    def _component_of(name: str, components: Optional[Sequence[str]]) -> str:
        if not components:
            return "module"
        head = name.split(".", 1)[0]
        return head if head in components else "other"

    def _add(self, component: str, flops: int):
        self.totals[component] = self.totals.get(component, 0) + int(flops)

    def _hook(self, component, formula):
        def hook(module, inputs, output):
            self._add(component, formula(module, output))
        return hook

    def _attention_hook(self, component):
        def hook(module, inputs, output):
            self._add(component, module.last_matmul_flops)
        return hook

    def remove(self):
        for handle in self.handles:
            handle.remove()
        self.handles = []


def count_module_cost(module: nn.Module, input_shape: Sequence[int]) -> CostReport:
    """
    Стоимость произвольного модуля на нулевом входе заданной формы

    Args:
        module: Модуль (forward принимает один тензор)
        input_shape: Форма входа, включая batch

    Returns:
        CostReport
    """
    counter = _FlopCounter(module)
    try:
        with torch.no_grad():
            module(torch.zeros(*input_shape))
    finally:
        counter.remove()
    params = sum(p.numel() for p in module.parameters())
    flops = sum(counter.totals.values())
    return CostReport(params=params, flops=flops, input_size=tuple(input_shape),
                      breakdown={"module": {"params": params, "flops": flops}})


def count_model_cost(model: nn.Module) -> CostReport:
    """Стоимость построенной MesorchNet на её собственном размере входа"""
    height, width = model.config.input_size
    counter = _FlopCounter(model, COMPONENTS)
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            model(torch.zeros(1, 3, height, width))
    finally:
        counter.remove()
        model.train(was_training)

    breakdown = {}
    for name in COMPONENTS:
        child = getattr(model, name, None)
        if child is None:
            continue
        breakdown[name] = {
            "params": sum(p.numel() for p in child.parameters()),
            "flops": counter.totals.get(name, 0),
        }
    params = sum(p.numel() for p in model.parameters())
    flops = sum(counter.totals.values())
    return CostReport(params=params, flops=flops, input_size=(height, width), breakdown=breakdown)


def count_cost(config: MesorchConfig, input_size: Optional[Tuple[int, int]] = None) -> CostReport:
    """
    Параметры и FLOPs архитектуры, заданной конфигурацией

    Args:
        config: Конфигурация модели (учитываются только активные ветви)
        input_size: (H, W); по умолчанию config.input_size

    Returns:
        CostReport с разбивкой по компонентам
    """
    if input_size is not None and tuple(input_size) != tuple(config.input_size):
        config = MesorchConfig(**{**config.model_dump(), "input_size": tuple(input_size)})
    report = count_model_cost(MesorchNet(config))
    app_logger.info(
        f"Стоимость модели {config.preset} @ {report.input_size}: "
        f"параметров={report.params}, GFLOPs={report.gflops:.4f}"
    )
    return report
