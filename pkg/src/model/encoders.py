"""
Локальный (свёрточный) и глобальный (self-attention) энкодеры Mesorch

Оба энкодера отдают карты признаков на шагах 4/8/16/32.
"""
from typing import List

import torch
import torch.nn as nn
import torch.nn.functional as F


class LayerNorm2d(nn.Module):
    """LayerNorm по каналам для тензора B×C×H×W"""

    def __init__(self, channels: int, eps: float = 1e-6):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.permute(0, 2, 3, 1)
        x = F.layer_norm(x, (x.shape[-1],), self.weight, self.bias, self.eps)
        return x.permute(0, 3, 1, 2)


class ConvBlock(nn.Module):
    """Блок в духе ConvNeXt: depthwise свёртка, LayerNorm, pointwise MLP, остаток"""

    def __init__(self, channels: int, kernel_size: int = 3, expansion: int = 2):
        super().__init__()
        self.dwconv = nn.Conv2d(channels, channels, kernel_size, padding=kernel_size // 2, groups=channels)
        self.norm = LayerNorm2d(channels)
        self.pwconv1 = nn.Conv2d(channels, expansion * channels, 1)
        self.act = nn.GELU()
        self.pwconv2 = nn.Conv2d(expansion * channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.pwconv2(self.act(self.pwconv1(self.norm(self.dwconv(x)))))


class LocalFeatureEncoder(nn.Module):
    """
    Свёрточный энкодер для входа с высокими частотами

    Стем 4×4/4, затем стадии из ConvBlock с понижением 2×2/2 между ними.
    Строится только num_stages первых стадий.
    """

    def __init__(
        self,
        in_channels: int,
        channels: List[int],
        depths: List[int],
        kernel_size: int = 3,
        expansion: int = 2,
        num_stages: int = 4
    ):
        super().__init__()
        self.num_stages = num_stages
        self.downsample = nn.ModuleList()
        self.stages = nn.ModuleList()
        for i in range(num_stages):
            if i == 0:
                down = nn.Sequential(
                    nn.Conv2d(in_channels, channels[0], kernel_size=4, stride=4),
                    LayerNorm2d(channels[0])
                )
            else:
                down = nn.Sequential(
                    LayerNorm2d(channels[i - 1]),
                    nn.Conv2d(channels[i - 1], channels[i], kernel_size=2, stride=2)
                )
            self.downsample.append(down)
            self.stages.append(nn.Sequential(*[
                ConvBlock(channels[i], kernel_size, expansion) for _ in range(depths[i])
            ]))

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        maps = []
        for down, stage in zip(self.downsample, self.stages):
            x = stage(down(x))
            maps.append(x)
        return maps


class OverlapPatchEmbed(nn.Module):
    """Перекрывающееся разбиение на патчи свёрткой + LayerNorm на токенах"""

    def __init__(self, in_channels: int, embed_dim: int, patch_size: int, stride: int):
        super().__init__()
        self.proj = nn.Conv2d(in_channels, embed_dim, kernel_size=patch_size, stride=stride, padding=patch_size // 2)
        self.norm = nn.LayerNorm(embed_dim)

    def forward(self, x: torch.Tensor):
        x = self.proj(x)
        _, _, height, width = x.shape
        x = x.flatten(2).transpose(1, 2)
        return self.norm(x), height, width


class EfficientAttention(nn.Module):
    """
    Self-attention с пространственным сжатием ключей/значений (SegFormer)

    После каждого прохода хранит last_matmul_flops - FLOPs двух матричных
    произведений QK^T и AV (проекции учитываются как Linear).
    """

    def __init__(self, dim: int, num_heads: int, sr_ratio: int = 1):
        super().__init__()
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.scale = self.head_dim ** -0.5
        self.q = nn.Linear(dim, dim)
        self.kv = nn.Linear(dim, dim * 2)
        self.proj = nn.Linear(dim, dim)
        self.sr_ratio = sr_ratio
        if sr_ratio > 1:
            self.sr = nn.Conv2d(dim, dim, kernel_size=sr_ratio, stride=sr_ratio)
            self.norm = nn.LayerNorm(dim)
        self.last_matmul_flops = 0

    def forward(self, x: torch.Tensor, height: int, width: int) -> torch.Tensor:
        batch, tokens, dim = x.shape
        q = self.q(x).reshape(batch, tokens, self.num_heads, self.head_dim).permute(0, 2, 1, 3)

        if self.sr_ratio > 1:
            reduced = x.transpose(1, 2).reshape(batch, dim, height, width)
            reduced = self.sr(reduced).reshape(batch, dim, -1).transpose(1, 2)
            reduced = self.norm(reduced)
        else:
            reduced = x
        kv = self.kv(reduced).reshape(batch, -1, 2, self.num_heads, self.head_dim).permute(2, 0, 3, 1, 4)
        k, v = kv.unbind(0)

        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(batch, tokens, dim)

        self.last_matmul_flops = 2 * 2 * batch * tokens * k.shape[-2] * dim
        return self.proj(out)


class MixFFN(nn.Module):
    """MLP с depthwise свёрткой 3×3 в скрытом слое"""

    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.dwconv = nn.Conv2d(hidden, hidden, 3, padding=1, groups=hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x: torch.Tensor, height: int, width: int) -> torch.Tensor:
        x = self.fc1(x)
        batch, tokens, channels = x.shape
        x = x.transpose(1, 2).reshape(batch, channels, height, width)
        x = self.dwconv(x).flatten(2).transpose(1, 2)
        return self.fc2(self.act(x))


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, num_heads: int, sr_ratio: int, mlp_ratio: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = EfficientAttention(dim, num_heads, sr_ratio)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = MixFFN(dim, dim * mlp_ratio)

    def forward(self, x: torch.Tensor, height: int, width: int) -> torch.Tensor:
        x = x + self.attn(self.norm1(x), height, width)
        return x + self.ffn(self.norm2(x), height, width)


class GlobalStage(nn.Module):
    def __init__(self, in_channels: int, dim: int, depth: int, num_heads: int,
                 sr_ratio: int, mlp_ratio: int, first: bool):
        super().__init__()
        if first:
            self.patch_embed = OverlapPatchEmbed(in_channels, dim, patch_size=7, stride=4)
        else:
            self.patch_embed = OverlapPatchEmbed(in_channels, dim, patch_size=3, stride=2)
        self.blocks = nn.ModuleList([
            TransformerBlock(dim, num_heads, sr_ratio, mlp_ratio) for _ in range(depth)
        ])
        self.norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens, height, width = self.patch_embed(x)
        for block in self.blocks:
            tokens = block(tokens, height, width)
        tokens = self.norm(tokens)
        return tokens.transpose(1, 2).reshape(x.shape[0], -1, height, width)


class GlobalFeatureEncoder(nn.Module):
    """
    Иерархический attention-энкодер (MiT/SegFormer) для входа с низкими частотами

    Патчи 7×7/4 на первой стадии, 3×3/2 на последующих; каждая стадия -
    набор блоков с пространственно сжатым вниманием.
    """

    def __init__(
        self,
        in_channels: int,
        channels: List[int],
        depths: List[int],
        num_heads: List[int],
        sr_ratios: List[int],
        mlp_ratio: int = 2,
        num_stages: int = 4
    ):
        super().__init__()
        self.num_stages = num_stages
        self.stages = nn.ModuleList()
        for i in range(num_stages):
            self.stages.append(GlobalStage(
                in_channels=in_channels if i == 0 else channels[i - 1],
                dim=channels[i],
                depth=depths[i],
                num_heads=num_heads[i],
                sr_ratio=sr_ratios[i],
                mlp_ratio=mlp_ratio,
                first=(i == 0)
            ))

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        maps = []
        for stage in self.stages:
            x = stage(x)
            maps.append(x)
        return maps
