"""
Модуль адаптивных весов масштабов
"""
import torch
import torch.nn as nn


class AdaptiveWeightingModule(nn.Module):
    """
    Свёрточная башня на входе {x, x_h, x_l} (9 каналов) с понижением до H/4
    и головой из K логитов на пиксель; веса - softmax по K.

    Голова инициализируется нулями, поэтому на старте все веса равны 1/K.
    """

    def __init__(self, num_branches: int, hidden: int = 16, in_channels: int = 9):
        super().__init__()
        self.tower = nn.Sequential(
            nn.Conv2d(in_channels, hidden, kernel_size=3, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(hidden, hidden, kernel_size=3, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(hidden, hidden, kernel_size=3, padding=1),
            nn.GELU()
        )
        self.head = nn.Conv2d(hidden, num_branches, kernel_size=1)
        self.reset_head()

    def reset_head(self):
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    @property
    def num_branches(self) -> int:
        return self.head.out_channels

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.tower(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.logits(x), dim=1)
