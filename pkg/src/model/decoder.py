"""
Помасштабный декодер в стиле all-MLP SegFormer
"""
from typing import Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F


class ScaleDecoder(nn.Module):
    """
    Линейная проекция каналов в общую ширину, билинейный апсемплинг до H/4
    и 1×1 голова с одним выходным каналом
    """

    def __init__(self, in_channels: int, width: int):
        super().__init__()
        self.proj = nn.Linear(in_channels, width)
        self.head = nn.Conv2d(width, 1, kernel_size=1)

    def forward(self, feature: torch.Tensor, out_size: Tuple[int, int]) -> torch.Tensor:
        batch, _, height, width = feature.shape
        x = self.proj(feature.flatten(2).transpose(1, 2))
        x = x.transpose(1, 2).reshape(batch, -1, height, width)
        if (height, width) != tuple(out_size):
            x = F.interpolate(x, size=tuple(out_size), mode="bilinear", align_corners=False)
        return self.head(x)
