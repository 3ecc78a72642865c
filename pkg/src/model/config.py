"""
Конфигурация архитектуры Mesorch
"""
import hashlib
import json
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

NUM_SCALES = 4
NUM_BRANCHES = 2 * NUM_SCALES
ALL_BRANCHES = list(range(1, NUM_BRANCHES + 1))
MAX_STRIDE = 32

ABLATION_BRANCHES = {
    "hybrid": ALL_BRANCHES,
    "local": [1, 2, 3, 4],
    "global": [5, 6, 7, 8],
    "single_scale": [4, 8],
}


def branch_family(branch: int) -> str:
    """Ветви 1-4 - локальный энкодер, 5-8 - глобальный"""
    return "local" if branch <= NUM_SCALES else "global"


def branch_scale(branch: int) -> int:
    """Номер масштаба ветви (1..4)"""
    return (branch - 1) % NUM_SCALES + 1


def branch_name(branch: int) -> str:
    return f"{branch_family(branch)}_{branch_scale(branch)}"


class MesorchConfig(BaseModel):
    """
    Параметры сети: ширины энкодеров, декодера, модуля весов и режим слияния

    Значения по умолчанию соответствуют пресету toy.
    """
    model_config = ConfigDict(extra="forbid")

    preset: Literal["toy", "paper"] = "toy"
    input_size: Tuple[int, int] = (64, 64)

    local_channels: List[int] = [16, 32, 64, 128]
    local_depths: List[int] = [2, 2, 2, 2]
    conv_kernel: int = 3
    conv_expansion: int = 2

    global_channels: List[int] = [16, 32, 64, 128]
    global_depths: List[int] = [2, 2, 2, 2]
    num_heads: List[int] = [1, 1, 2, 2]
    sr_ratios: List[int] = [4, 2, 1, 1]
    mlp_ratio: int = 2

    decoder_width: int = 32
    weighting_hidden: int = 16
    fusion_mode: Literal["uniform", "adaptive"] = "adaptive"

    freq_cutoff: float = 1.0 / 16.0
    local_band: Literal["high", "low"] = "high"
    global_band: Literal["high", "low"] = "low"
    use_dct: bool = True

    active_branches: List[int] = ALL_BRANCHES
    frozen_branch_weights: Optional[List[float]] = None

    @field_validator("local_channels", "local_depths", "global_channels", "global_depths", "num_heads", "sr_ratios")
    @classmethod
    def _four_positive(cls, value: List[int]) -> List[int]:
        if len(value) != NUM_SCALES:
            raise ValueError(f"ожидается ровно {NUM_SCALES} значения по масштабам, получено {len(value)}")
        if any(v < 1 for v in value):
            raise ValueError(f"все значения должны быть >= 1: {value}")
        return value

    @field_validator("freq_cutoff")
    @classmethod
    def _cutoff_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"freq_cutoff должен лежать в (0, 1), получено {value}")
        return value

    @field_validator("active_branches")
    @classmethod
    def _branches_valid(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("нужна хотя бы одна активная ветвь")
        if len(set(value)) != len(value):
            raise ValueError(f"повторяющиеся ветви: {value}")
        if any(b not in ALL_BRANCHES for b in value):
            raise ValueError(f"номера ветвей должны лежать в 1..{NUM_BRANCHES}: {value}")
        return sorted(value)

    @model_validator(mode="after")
    def _check_geometry(self) -> "MesorchConfig":
        height, width = self.input_size
        if height < MAX_STRIDE or width < MAX_STRIDE or height % MAX_STRIDE or width % MAX_STRIDE:
            raise ValueError(f"input_size {self.input_size} должен делиться на {MAX_STRIDE}")
        for channels, heads in zip(self.global_channels, self.num_heads):
            if channels % heads:
                raise ValueError(f"global_channels {channels} не делится на число голов {heads}")
        for i, ratio in enumerate(self.sr_ratios):
            side = min(height, width) // 2 ** (i + 2)
            if side % ratio:
                raise ValueError(f"sr_ratio {ratio} не делит размер карты {side} на масштабе {i + 1}")
        if min(self.decoder_width, self.weighting_hidden, self.mlp_ratio, self.conv_expansion) < 1:
            raise ValueError("ширины декодера/модуля весов должны быть >= 1")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError(f"conv_kernel должен быть нечётным, получено {self.conv_kernel}")
        if self.frozen_branch_weights is not None:
            if self.fusion_mode != "adaptive":
                raise ValueError("frozen_branch_weights имеют смысл только в режиме adaptive")
            if len(self.frozen_branch_weights) != len(self.active_branches):
                raise ValueError("frozen_branch_weights должны совпадать по длине с active_branches")
            if any(w < 0 for w in self.frozen_branch_weights) or abs(sum(self.frozen_branch_weights) - 1.0) > 1e-5:
                raise ValueError("frozen_branch_weights должны быть неотрицательны и суммироваться в 1")
        return self

    @property
    def num_branches(self) -> int:
        return len(self.active_branches)

    def active_scales(self, family: str) -> List[int]:
        """Активные масштабы одного энкодера"""
        return [branch_scale(b) for b in self.active_branches if branch_family(b) == family]

    def encoder_depth(self, family: str) -> int:
        """Сколько стадий энкодера нужно, чтобы накормить его активные ветви"""
        scales = self.active_scales(family)
        return max(scales) if scales else 0

    def branch_channels(self, branch: int) -> int:
        channels = self.local_channels if branch_family(branch) == "local" else self.global_channels
        return channels[branch_scale(branch) - 1]

    def scale_shape(self, scale: int) -> Tuple[int, int]:
        """Пространственный размер карты масштаба i: H/2^(i+1) × W/2^(i+1)"""
        height, width = self.input_size
        return height // 2 ** (scale + 1), width // 2 ** (scale + 1)

    @property
    def prediction_shape(self) -> Tuple[int, int]:
        return self.scale_shape(1)

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def paper_model_config(**overrides) -> MesorchConfig:
    """Ширины и шаги опубликованной пары ConvNeXt-T / SegFormer-B3 (без предобучения)"""
    values = dict(
        preset="paper",
        input_size=(512, 512),
        local_channels=[96, 192, 384, 768],
        local_depths=[3, 3, 9, 3],
        conv_kernel=7,
        conv_expansion=4,
        global_channels=[64, 128, 320, 512],
        global_depths=[3, 4, 18, 3],
        num_heads=[1, 2, 5, 8],
        sr_ratios=[8, 4, 2, 1],
        mlp_ratio=4,
        decoder_width=256,
        weighting_hidden=64,
    )
    values.update(overrides)
    return MesorchConfig(**values)


def toy_model_config(**overrides) -> MesorchConfig:
    return MesorchConfig(**overrides)
