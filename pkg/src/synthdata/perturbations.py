"""
Искажения для проверки устойчивости: гауссов шум, размытие, JPEG
"""
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

import numpy as np
from PIL import Image

from src.errors import ConfigError

NOISE_LEVELS = (3, 7, 11, 15, 19, 23)
BLUR_KERNELS = (3, 7, 11, 15, 19, 23)
JPEG_QUALITIES = (100, 90, 80, 70, 60, 50)

PERTURB_GRID = {
    "gauss_noise": NOISE_LEVELS,
    "gauss_blur": BLUR_KERNELS,
    "jpeg": JPEG_QUALITIES,
}


@dataclass(frozen=True)
class PerturbSpec:
    """kind = none | gauss_noise | gauss_blur | jpeg; level из сетки соответствующего вида"""
    kind: str = "none"
    level: Optional[int] = None

    def __post_init__(self):
        if self.kind == "none":
            if self.level is not None:
                raise ConfigError(f"У искажения none не бывает уровня: {self.level}")
            return
        if self.kind not in PERTURB_GRID:
            raise ConfigError(f"Неизвестный вид искажения {self.kind}, ожидается один из {list(PERTURB_GRID)}")
        if self.level not in PERTURB_GRID[self.kind]:
            raise ConfigError(
                f"Недопустимый уровень {self.level} для {self.kind}, ожидается один из {PERTURB_GRID[self.kind]}"
            )

    @property
    def label(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}:{self.level}"

    @classmethod
    def parse(cls, text: str) -> "PerturbSpec":
        """'none' или 'kind:level', например 'jpeg:70'"""
        text = text.strip()
        if text in ("", "none"):
            return cls()
        kind, _, level = text.partition(":")
        try:
            return cls(kind=kind, level=int(level))
        except ValueError:
            raise ConfigError(f"Не удалось разобрать искажение '{text}'")


def robustness_grid() -> List[PerturbSpec]:
    """None плюс 3 вида × 6 уровней"""
    grid = [PerturbSpec()]
    for kind, levels in PERTURB_GRID.items():
        grid.extend(PerturbSpec(kind, level) for level in levels)
    return grid


@lru_cache(maxsize=None)
def gaussian_kernel(size: int) -> np.ndarray:
    """Одномерное ядро с σ = 0.3·((k − 1)/2 − 1) + 0.8, нормированное к 1"""
    sigma = 0.3 * ((size - 1) / 2.0 - 1) + 0.8
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return kernel / kernel.sum()


def _convolve_axis(image: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0)] * image.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(image, pad, mode="reflect")
    length = image.shape[axis]
    out = np.zeros_like(image)
    for i, weight in enumerate(kernel):
        out += weight * np.take(padded, np.arange(i, i + length), axis=axis)
    return out


def gaussian_blur(image: np.ndarray, size: int) -> np.ndarray:
    """Сепарабельная свёртка k×k с отражением на краях"""
    kernel = gaussian_kernel(size)
    blurred = _convolve_axis(image.astype(np.float64), kernel, axis=0)
    blurred = _convolve_axis(blurred, kernel, axis=1)
    return blurred


def jpeg_roundtrip(image: np.ndarray, quality: int) -> np.ndarray:
    """Кодирование и декодирование JPEG с субдискретизацией 4:2:0"""
    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buffer, format="JPEG", quality=quality, subsampling=2)
    buffer.seek(0)
    with Image.open(buffer) as decoded:
        return np.asarray(decoded.convert("RGB"), dtype=np.float32) / 255.0


def perturb(image: np.ndarray, spec: PerturbSpec, seed: int = 0) -> np.ndarray:
    """
    Применяет искажение к изображению H×W×3 в [0, 1]

    Args:
        image: Исходное изображение
        spec: Вид и уровень искажения
        seed: Зерно шума

    Returns:
        Искажённое изображение float32 в [0, 1]
    """
    if spec.kind == "none":
        return image.copy()
    if spec.kind == "gauss_noise":
        rng = np.random.default_rng(seed)
        noisy = image.astype(np.float64) + rng.normal(0.0, spec.level / 255.0, image.shape)
        return np.clip(noisy, 0.0, 1.0).astype(np.float32)
    if spec.kind == "gauss_blur":
        return np.clip(gaussian_blur(image, spec.level), 0.0, 1.0).astype(np.float32)
    return jpeg_roundtrip(image, spec.level)
