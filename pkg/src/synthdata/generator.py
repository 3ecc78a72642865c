"""
Процедурный генератор подделок: splice, copy-move, inpaint

Изображения - numpy H×W×3 float32 в [0, 1], маски - H×W bool (True = подделка).
Всё детерминировано по seed.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from src.errors import InvalidInputError, TamperGenerationError
from utils.logger import app_logger

TAMPER_TYPES = ("splice", "copy_move", "inpaint")
MIN_SIDE = 32
MIN_AREA = 0.01
MAX_AREA = 0.6
MAX_ATTEMPTS = 10
COPY_MOVE_MAX_AREA = 0.25
OBJECT_ALIGNED_FRACTION = 0.8
PLACEMENT_TRIES = 64

INPAINT_TOLERANCE = 1e-4
INPAINT_MAX_ITERATIONS = 1000


@dataclass
class Scene:
    """Базовое изображение и маски нарисованных на нём объектов"""
    image: np.ndarray
    objects: List[np.ndarray] = field(default_factory=list)


@dataclass
class TamperSample:
    image: np.ndarray
    mask: np.ndarray
    tamper_type: str
    seed: int
    object_aligned: bool = False

    @property
    def area_fraction(self) -> float:
        return float(self.mask.mean())


def _check_image(image: np.ndarray):
    if image.ndim != 3 or image.shape[2] != 3:
        raise InvalidInputError(f"Ожидается изображение H×W×3, получено {image.shape}")
    if min(image.shape[:2]) < MIN_SIDE:
        raise InvalidInputError(f"Сторона изображения меньше {MIN_SIDE}: {image.shape[:2]}")


def _shape_mask(rng: np.random.Generator, height: int, width: int,
                min_radius: float = 0.1, max_radius: float = 0.35) -> np.ndarray:
    """Эллипс, прямоугольник или многоугольник, нарисованный через ImageDraw"""
    canvas = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(canvas)
    cy, cx = rng.uniform(0.15, 0.85) * height, rng.uniform(0.15, 0.85) * width
    ry = rng.uniform(min_radius, max_radius) * height
    rx = rng.uniform(min_radius, max_radius) * width
    kind = rng.integers(3)
    if kind == 0:
        draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    elif kind == 1:
        draw.rectangle([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    else:
        vertices = int(rng.integers(3, 8))
        angles = np.sort(rng.uniform(0, 2 * np.pi, vertices))
        scale = rng.uniform(0.6, 1.0, vertices)
        points = [(cx + rx * s * np.cos(a), cy + ry * s * np.sin(a)) for a, s in zip(angles, scale)]
        draw.polygon(points, fill=255)
    return np.asarray(canvas) > 127


def gen_scene(seed: int, height: int, width: int) -> Scene:
    """
    Градиентный фон и 2-5 текстурированных цветных фигур

    Args:
        seed: Зерно
        height: Высота (>= 32)
        width: Ширина (>= 32)

    Returns:
        Scene с изображением и масками объектов
    """
    if height < MIN_SIDE or width < MIN_SIDE:
        raise InvalidInputError(f"Размер сцены должен быть не меньше {MIN_SIDE}: {height}×{width}")
    rng = np.random.default_rng(seed)

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    angle = rng.uniform(0, 2 * np.pi)
    t = np.cos(angle) * xx / width + np.sin(angle) * yy / height
    t = (t - t.min()) / max(t.max() - t.min(), 1e-12)
    start, end = rng.uniform(0.1, 0.9, 3), rng.uniform(0.1, 0.9, 3)
    image = start[None, None, :] * (1 - t[..., None]) + end[None, None, :] * t[..., None]

    objects = []
    for _ in range(int(rng.integers(2, 6))):
        mask = _shape_mask(rng, height, width)
        if not mask.any():
            continue
        color = rng.uniform(0.05, 0.95, 3)
        period = rng.uniform(4, 16)
        phase = rng.uniform(0, 2 * np.pi)
        stripes = 0.08 * np.sin(2 * np.pi * (xx * np.cos(phase) + yy * np.sin(phase)) / period)
        grain = rng.normal(0, 0.02, (height, width))
        texture = color[None, None, :] + (stripes + grain)[..., None]
        image[mask] = texture[mask]
        objects.append(mask)

    return Scene(image=np.clip(image, 0.0, 1.0).astype(np.float32), objects=objects)


def gen_base_image(seed: int, height: int, width: int) -> np.ndarray:
    return gen_scene(seed, height, width).image


def _pick_region(rng: np.random.Generator, height: int, width: int,
                 objects: Optional[List[np.ndarray]], object_aligned: bool,
                 max_area: float = MAX_AREA) -> Tuple[np.ndarray, bool]:
    """
    Область подделки с долей площади в [MIN_AREA, max_area]

    Returns:
        (маска, взята ли она по объекту сцены)
    """
    candidates = [m for m in (objects or []) if MIN_AREA <= m.mean() <= max_area]
    for _ in range(MAX_ATTEMPTS):
        from_object = bool(object_aligned and candidates)
        if from_object:
            region = candidates[int(rng.integers(len(candidates)))]
        else:
            region = _shape_mask(rng, height, width, min_radius=0.08, max_radius=0.3)
        if MIN_AREA <= region.mean() <= max_area:
            return region.copy(), from_object
    raise TamperGenerationError(
        f"Не удалось построить область площадью [{MIN_AREA}, {max_area}] за {MAX_ATTEMPTS} попыток"
    )


def gen_splice(seed: int, donor: np.ndarray, host: np.ndarray,
               donor_objects: Optional[List[np.ndarray]] = None,
               object_aligned: bool = False) -> TamperSample:
    """
    Вклейка области донора в изображение-носитель без смешивания

    Args:
        seed: Зерно
        donor: Изображение-донор
        host: Изображение-носитель того же размера
        donor_objects: Маски объектов донора для областей по объектам
        object_aligned: Брать область по объекту донора

    Returns:
        TamperSample
    """
    _check_image(donor)
    _check_image(host)
    if donor.shape != host.shape:
        raise InvalidInputError(f"Донор {donor.shape} и носитель {host.shape} разного размера")
    rng = np.random.default_rng(seed)
    height, width = host.shape[:2]
    mask, aligned = _pick_region(rng, height, width, donor_objects, object_aligned)
    tampered = host.copy()
    tampered[mask] = donor[mask]
    return TamperSample(tampered, mask, "splice", seed, aligned)


def gen_copy_move(seed: int, image: np.ndarray, objects: Optional[List[np.ndarray]] = None,
                  object_aligned: bool = False) -> TamperSample:
    """
    Копирует область в непересекающееся место того же изображения

    Returns:
        TamperSample; маска отмечает место вставки
    """
    _check_image(image)
    rng = np.random.default_rng(seed)
    height, width = image.shape[:2]

    for _ in range(MAX_ATTEMPTS):
        source, aligned = _pick_region(rng, height, width, objects, object_aligned, max_area=COPY_MOVE_MAX_AREA)
        rows = np.flatnonzero(source.any(axis=1))
        cols = np.flatnonzero(source.any(axis=0))
        y0, y1, x0, x1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
        patch = source[y0:y1, x0:x1]
        ph, pw = patch.shape

        for _ in range(PLACEMENT_TRIES):
            ty = int(rng.integers(0, height - ph + 1))
            tx = int(rng.integers(0, width - pw + 1))
            if (ty, tx) == (y0, x0):
                continue
            destination = np.zeros_like(source)
            destination[ty:ty + ph, tx:tx + pw] = patch
            if (destination & source).any():
                continue
            tampered = image.copy()
            window = tampered[ty:ty + ph, tx:tx + pw]
            window[patch] = image[y0:y1, x0:x1][patch]
            return TamperSample(tampered, destination, "copy_move", seed, aligned)

    raise TamperGenerationError(f"Не удалось разместить copy-move без пересечения за {MAX_ATTEMPTS} попыток")


def diffuse_fill(image: np.ndarray, mask: np.ndarray,
                 tolerance: float = INPAINT_TOLERANCE,
                 max_iterations: int = INPAINT_MAX_ITERATIONS) -> Tuple[np.ndarray, int]:
    """
    Лапласово заполнение: итерации Якоби по среднему 4 соседей внутри маски

    Returns:
        (заполненное изображение, число итераций)
    """
    filled = image.astype(np.float64).copy()
    padded_mask = np.pad(mask, 1, mode="constant", constant_values=False)
    ring = (
        padded_mask[:-2, 1:-1] | padded_mask[2:, 1:-1] | padded_mask[1:-1, :-2] | padded_mask[1:-1, 2:]
    ) & ~mask
    start = filled[ring].mean(axis=0) if ring.any() else filled[~mask].mean(axis=0)
    filled[mask] = start

    iterations = 0
    for iterations in range(1, max_iterations + 1):
        p = np.pad(filled, ((1, 1), (1, 1), (0, 0)), mode="edge")
        average = (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]) / 4.0
        residual = float(np.abs(average[mask] - filled[mask]).max()) if mask.any() else 0.0
        filled[mask] = average[mask]
        if residual < tolerance:
            break
    return filled.astype(image.dtype), iterations


def gen_inpaint(seed: int, image: np.ndarray, objects: Optional[List[np.ndarray]] = None,
                object_aligned: bool = False) -> TamperSample:
    """Стирает область и заполняет её диффузией от границы"""
    _check_image(image)
    rng = np.random.default_rng(seed)
    height, width = image.shape[:2]
    mask, aligned = _pick_region(rng, height, width, objects, object_aligned)
    filled, _ = diffuse_fill(image, mask)
    tampered = image.copy()
    tampered[mask] = np.clip(filled[mask], 0.0, 1.0)
    return TamperSample(tampered, mask, "inpaint", seed, aligned)


def generate_sample(seed: int, height: int, width: int, tamper_type: Optional[str] = None) -> TamperSample:
    """
    Один образец: тип подделки и привязка к объекту выбираются по seed

    Args:
        seed: Зерно образца
        height: Высота
        width: Ширина
        tamper_type: Фиксированный тип или None

    Returns:
        TamperSample
    """
    rng = np.random.default_rng(seed)
    if tamper_type is None:
        tamper_type = TAMPER_TYPES[int(rng.integers(len(TAMPER_TYPES)))]
    elif tamper_type not in TAMPER_TYPES:
        raise InvalidInputError(f"Неизвестный тип подделки {tamper_type}")
    object_aligned = bool(rng.random() < OBJECT_ALIGNED_FRACTION)
    scene_seed, donor_seed = (int(s) for s in rng.integers(0, 2 ** 31 - 1, 2))
    op_seeds = [int(s) for s in rng.integers(0, 2 ** 31 - 1, MAX_ATTEMPTS)]

    host = gen_scene(scene_seed, height, width)
    donor = gen_scene(donor_seed, height, width) if tamper_type == "splice" else None
    last_error = None
    for attempt, op_seed in enumerate(op_seeds):
        # последняя попытка - свободная область
        aligned = object_aligned and attempt < MAX_ATTEMPTS - 1
        try:
            if tamper_type == "splice":
                sample = gen_splice(op_seed, donor.image, host.image, donor.objects, aligned)
            elif tamper_type == "copy_move":
                sample = gen_copy_move(op_seed, host.image, host.objects, aligned)
            else:
                sample = gen_inpaint(op_seed, host.image, host.objects, aligned)
        except TamperGenerationError as e:
            app_logger.debug(f"seed={seed}, попытка {attempt + 1}: {e}")
            last_error = e
            continue
        sample.seed = seed
        return sample
    raise TamperGenerationError(f"Образец seed={seed} ({tamper_type}) не построен: {last_error}")
