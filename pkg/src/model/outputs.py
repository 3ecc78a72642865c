"""
Промежуточные и итоговые результаты прямого прохода Mesorch
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import torch

from src.model.config import NUM_SCALES, branch_family


@dataclass
class ScalePyramid:
    """Карты признаков одного энкодера, maps[i] - масштаб i + 1"""
    maps: List[torch.Tensor]

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, index: int) -> torch.Tensor:
        return self.maps[index]

    @property
    def spatial_shapes(self):
        return [tuple(m.shape[-2:]) for m in self.maps]


@dataclass
class PredictionSet:
    """Логиты масок по ветвям: номер ветви (1..8) -> B×1×H/4×W/4"""
    maps: Dict[int, torch.Tensor]

    @property
    def branches(self) -> List[int]:
        return sorted(self.maps)

    @property
    def local_maps(self) -> List[torch.Tensor]:
        return [self.maps[b] for b in self.branches if branch_family(b) == "local"]

    @property
    def global_maps(self) -> List[torch.Tensor]:
        return [self.maps[b] for b in self.branches if branch_family(b) == "global"]

    def combined(self) -> torch.Tensor:
        """P_all: B×K×H/4×W/4 в порядке локальные 1-4, затем глобальные 1-4"""
        return torch.cat([self.maps[b] for b in self.branches], dim=1)

    @classmethod
    def from_tensor(cls, p_all: torch.Tensor, branches: Optional[List[int]] = None) -> "PredictionSet":
        branches = branches or list(range(1, 2 * NUM_SCALES + 1))
        return cls({b: p_all[:, i:i + 1] for i, b in enumerate(branches)})


@dataclass
class WeightMap:
    """Попиксельные веса ветвей B×K×H/4×W/4, сумма по K равна 1"""
    weights: torch.Tensor

    @property
    def num_branches(self) -> int:
        return self.weights.shape[1]


@dataclass
class FinalPrediction:
    """P_summed (H/4) и P_final (H×W) в логитах"""
    summed: torch.Tensor
    full: torch.Tensor

    @property
    def probability(self) -> torch.Tensor:
        return torch.sigmoid(self.full)


@dataclass
class MesorchOutput:
    final: FinalPrediction
    predictions: PredictionSet
    local_pyramid: Optional[ScalePyramid] = None
    global_pyramid: Optional[ScalePyramid] = None
    weights: Optional[WeightMap] = None
    extras: Dict[str, torch.Tensor] = field(default_factory=dict)
