"""
Сеть Mesorch: DCT-входы, параллельные энкодеры, помасштабные декодеры,
адаптивные веса и слияние
"""
from contextlib import contextmanager
from typing import Optional

import torch
import torch.nn as nn

from src.errors import ConfigError, InvalidInputError, MesorchError, NotApplicableError
from src.frequency.dct import EnhancedInput, make_enhanced_inputs
from src.model.config import MesorchConfig, branch_family, branch_name, branch_scale
from src.model.decoder import ScaleDecoder
from src.model.encoders import GlobalFeatureEncoder, LayerNorm2d, LocalFeatureEncoder
from src.model.fusion import fuse
from src.model.outputs import MesorchOutput, PredictionSet, ScalePyramid, WeightMap
from src.model.weighting import AdaptiveWeightingModule
from utils.logger import app_logger

INIT_STD = 0.02


@contextmanager
def _stage(name: str):
    """Приписывает имя этапа любой ошибке внутри блока"""
    try:
        yield
    except MesorchError as error:
        raise error.with_stage(name)
    except (RuntimeError, ValueError) as error:
        raise InvalidInputError(str(error), stage=name) from error


class MesorchNet(nn.Module):
    """
    Гибридная CNN+Transformer модель локализации манипуляций

    Строит только те декодеры, ветви которых перечислены в
    config.active_branches, и только те стадии энкодеров, которые их кормят.
    """

    def __init__(self, config: MesorchConfig):
        super().__init__()
        self.config = config

        local_depth = config.encoder_depth("local")
        global_depth = config.encoder_depth("global")
        self.local_encoder = None
        self.global_encoder = None
        if local_depth:
            self.local_encoder = LocalFeatureEncoder(
                in_channels=6,
                channels=config.local_channels,
                depths=config.local_depths,
                kernel_size=config.conv_kernel,
                expansion=config.conv_expansion,
                num_stages=local_depth
            )
        if global_depth:
            self.global_encoder = GlobalFeatureEncoder(
                in_channels=6,
                channels=config.global_channels,
                depths=config.global_depths,
                num_heads=config.num_heads,
                sr_ratios=config.sr_ratios,
                mlp_ratio=config.mlp_ratio,
                num_stages=global_depth
            )

        self.decoders = nn.ModuleDict({
            branch_name(b): ScaleDecoder(config.branch_channels(b), config.decoder_width)
            for b in config.active_branches
        })

        self.weighting = None
        if config.fusion_mode == "adaptive" and config.frozen_branch_weights is None:
            self.weighting = AdaptiveWeightingModule(config.num_branches, hidden=config.weighting_hidden)
        if config.frozen_branch_weights is not None:
            self.register_buffer(
                "frozen_weights",
                torch.tensor(config.frozen_branch_weights, dtype=torch.float32).reshape(1, -1, 1, 1)
            )
        else:
            self.frozen_weights = None

        self.apply(self._init_weights)
        if self.weighting is not None:
            self.weighting.reset_head()

    @staticmethod
    def _init_weights(module: nn.Module):
        if isinstance(module, (nn.Linear, nn.Conv2d)):
            nn.init.trunc_normal_(module.weight, std=INIT_STD, a=-2 * INIT_STD, b=2 * INIT_STD)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, (nn.LayerNorm, LayerNorm2d)):
            nn.init.ones_(module.weight)
            nn.init.zeros_(module.bias)

    @property
    def active_branches(self):
        return list(self.config.active_branches)

    def _check_input(self, x: torch.Tensor, channels: int, what: str):
        expected = tuple(self.config.input_size)
        if x.dim() != 4 or x.shape[1] != channels or tuple(x.shape[-2:]) != expected:
            raise ConfigError(
                f"{what}: ожидается B×{channels}×{expected[0]}×{expected[1]}, получено {tuple(x.shape)}"
            )

    def local_encode(self, local_input: torch.Tensor) -> ScalePyramid:
        """LocalFeatureEncoder(I_h)"""
        if self.local_encoder is None:
            raise NotApplicableError("Локальный энкодер удалён: нет активных локальных ветвей")
        self._check_input(local_input, 6, "local_encode")
        return ScalePyramid(self.local_encoder(local_input))

    def global_encode(self, global_input: torch.Tensor) -> ScalePyramid:
        """GlobalFeatureEncoder(I_l)"""
        if self.global_encoder is None:
            raise NotApplicableError("Глобальный энкодер удалён: нет активных глобальных ветвей")
        self._check_input(global_input, 6, "global_encode")
        return ScalePyramid(self.global_encoder(global_input))

    def decode_scale(self, feature: torch.Tensor, branch: int) -> torch.Tensor:
        """Логиты маски H/4×W/4 для одной ветви"""
        name = branch_name(branch)
        if name not in self.decoders:
            raise NotApplicableError(f"Ветвь {branch} ({name}) не активна")
        scale = branch_scale(branch)
        expected_shape = self.config.scale_shape(scale)
        expected_channels = self.config.branch_channels(branch)
        if feature.dim() != 4 or tuple(feature.shape[-2:]) != expected_shape or feature.shape[1] != expected_channels:
            raise ConfigError(
                f"Ветвь {name}: ожидалась карта B×{expected_channels}×{expected_shape[0]}×{expected_shape[1]}, "
                f"получено {tuple(feature.shape)}"
            )
        return self.decoders[name](feature, self.config.prediction_shape)

    def adaptive_weights(self, weight_input: torch.Tensor) -> WeightMap:
        """Попиксельные нормированные веса ветвей"""
        if self.config.fusion_mode != "adaptive":
            raise NotApplicableError("Модуль весов не используется в режиме uniform")
        self._check_input(weight_input, 9, "adaptive_weights")
        if self.weighting is None:
            h, w = self.config.prediction_shape
            weights = self.frozen_weights.to(weight_input.dtype).expand(weight_input.shape[0], -1, h, w)
            return WeightMap(weights)
        return WeightMap(self.weighting(weight_input))

    def enhance(self, image: torch.Tensor) -> EnhancedInput:
        self._check_input(image, 3, "forward")
        return make_enhanced_inputs(
            image,
            cutoff=self.config.freq_cutoff,
            local_band=self.config.local_band,
            global_band=self.config.global_band,
            use_dct=self.config.use_dct
        )

    def forward_enhanced(self, inputs: EnhancedInput, height: int, width: int) -> MesorchOutput:
        """Прямой проход от готовых входов ветвей"""
        local_pyramid = global_pyramid = None
        if self.local_encoder is not None:
            with _stage("local_encode"):
                local_pyramid = self.local_encode(inputs.local_input)
        if self.global_encoder is not None:
            with _stage("global_encode"):
                global_pyramid = self.global_encode(inputs.global_input)

        maps = {}
        with _stage("decode_scale"):
            for b in self.config.active_branches:
                pyramid = local_pyramid if branch_family(b) == "local" else global_pyramid
                maps[b] = self.decode_scale(pyramid[branch_scale(b) - 1], b)
        predictions = PredictionSet(maps)

        weights: Optional[WeightMap] = None
        if self.config.fusion_mode == "adaptive":
            with _stage("adaptive_weights"):
                weights = self.adaptive_weights(inputs.weight_input)

        with _stage("fuse"):
            final = fuse(predictions, weights, height, width)

        return MesorchOutput(
            final=final,
            predictions=predictions,
            local_pyramid=local_pyramid,
            global_pyramid=global_pyramid,
            weights=weights
        )

    def forward(self, image: torch.Tensor) -> MesorchOutput:
        with _stage("make_enhanced_inputs"):
            inputs = self.enhance(image)
        return self.forward_enhanced(inputs, image.shape[-2], image.shape[-1])


def build_model(config: MesorchConfig, seed: int = 0) -> MesorchNet:
    """Создаёт модель с детерминированной инициализацией"""
    torch.manual_seed(seed)
    model = MesorchNet(config)
    app_logger.info(
        f"MesorchNet создан: preset={config.preset}, ветвей={config.num_branches}, "
        f"fusion={config.fusion_mode}, параметров={sum(p.numel() for p in model.parameters())}"
    )
    return model
