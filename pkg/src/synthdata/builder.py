"""
Сборка синтетического датасета со сплитами train/val/test/calibration
"""
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import ConfigError
from src.synthdata.dataset_store import SPLITS, DatasetManifest, write_dataset
from src.synthdata.generator import TamperSample, generate_sample
from utils.logger import app_logger, progress

DEFAULT_SPLIT_FRACTIONS = (0.7, 0.1, 0.1, 0.1)
MIN_COUNT = 4
SEED_STRIDE = 1_000_000


def split_counts(count: int, fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS) -> Dict[str, int]:
    """
    Размеры сплитов; остаток от округления уходит в train

    Args:
        count: Общее число образцов
        fractions: Доли train, val, test, calibration

    Returns:
        Словарь split -> число образцов
    """
    if len(fractions) != len(SPLITS):
        raise ConfigError(f"Нужно {len(SPLITS)} доли сплитов, получено {len(fractions)}")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-6:
        raise ConfigError(f"Доли сплитов должны быть неотрицательны и давать 1: {list(fractions)}")
    if count < MIN_COUNT:
        raise ConfigError(f"count должен быть не меньше {MIN_COUNT}, получено {count}")

    counts = {}
    for split, fraction in zip(SPLITS[1:], fractions[1:]):
        counts[split] = max(1, math.floor(fraction * count + 1e-9)) if fraction > 0 else 0
    counts["train"] = count - sum(counts.values())
    if counts["train"] < 1:
        raise ConfigError(f"Для train не осталось образцов при count={count} и долях {list(fractions)}")
    return {split: counts[split] for split in SPLITS}


def assign_splits(count: int, seed: int, fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS) -> List[str]:
    """Сплит каждого индекса: детерминированная перестановка по seed"""
    labels = []
    for split, n in split_counts(count, fractions).items():
        labels.extend([split] * n)
    order = np.random.default_rng(seed).permutation(count)
    return [labels[i] for i in order]


def _generate_indexed(args: Tuple[int, int, int, int]) -> TamperSample:
    seed, index, height, width = args
    return generate_sample(seed * SEED_STRIDE + index, height, width)


def generate_dataset(
    root,
    count: int,
    seed: int = 0,
    size: Tuple[int, int] = (64, 64),
    split_fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS,
    workers: int = 1
) -> DatasetManifest:
    """
    Генерирует и записывает датасет; результат - чистая функция (seed, параметров)

    Args:
        root: Каталог вывода
        count: Число образцов (>= 4, < 1e6)
        seed: Зерно
        size: (H, W)
        split_fractions: Доли сплитов
        workers: Число процессов генерации

    Returns:
        DatasetManifest
    """
    if count >= SEED_STRIDE:
        raise ConfigError(f"count должен быть меньше {SEED_STRIDE}")
    splits = assign_splits(count, seed, split_fractions)
    height, width = size
    tasks = [(seed, i, height, width) for i in range(count)]
    app_logger.info(f"Генерация датасета: {count} образцов {height}×{width}, seed={seed}, workers={workers}")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(progress(pool.map(_generate_indexed, tasks, chunksize=8), total=count, desc="Генерация"))
    else:
        samples = [_generate_indexed(t) for t in progress(tasks, desc="Генерация")]

    items = ((splits[i], f"{i:06d}", sample) for i, sample in enumerate(samples))
    manifest = write_dataset(Path(root), items, seed=seed, image_size=(height, width))
    return manifest
