"""
Хранение датасета на диске: root/{split}/images|masks/*.png и root/manifest.json
"""
import json
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np
import torch
from PIL import Image
from pydantic import BaseModel, ConfigDict, ValidationError
from torch.utils.data import Dataset

from src.errors import DatasetIOError
from src.synthdata.generator import TamperSample
from src.synthdata.perturbations import PerturbSpec, perturb
from utils.logger import app_logger

SPLITS = ("train", "val", "test", "calibration")
MANIFEST_NAME = "manifest.json"


class SampleRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sample_id: str
    split: str
    image: str
    mask: str
    tamper_type: str
    seed: int
    object_aligned: bool = False


class DatasetManifest(BaseModel):
    """Описание датасета; пути в записях относительны root"""
    model_config = ConfigDict(extra="forbid")

    root: str
    image_size: Optional[Tuple[int, int]] = None
    seed: Optional[int] = None
    generated_at: Optional[str] = None
    records: List[SampleRecord] = []

    def split_records(self, split: str) -> List[SampleRecord]:
        return [r for r in self.records if r.split == split]

    def counts(self) -> Dict[str, int]:
        return {split: len(self.split_records(split)) for split in SPLITS}


def save_image(path: Path, image: np.ndarray):
    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
    except OSError as e:
        raise DatasetIOError(f"Не удалось записать изображение ({e})", str(path))


def save_mask(path: Path, mask: np.ndarray):
    pixels = np.where(mask, 255, 0).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels, mode="L").save(path, format="PNG")
    except OSError as e:
        raise DatasetIOError(f"Не удалось записать маску ({e})", str(path))


def load_image(path, size: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """RGB-файл -> H×W×3 float32 в [0, 1]; size = (H, W) для билинейного ресайза"""
    try:
        with Image.open(path) as img:
            img = img.convert("RGB")
            if size is not None and img.size != (size[1], size[0]):
                img = img.resize((size[1], size[0]), Image.BILINEAR)
            return np.asarray(img, dtype=np.float32) / 255.0
    except OSError as e:
        raise DatasetIOError(f"Не удалось прочитать изображение ({e})", str(path))


def load_mask(path, size: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Маска -> H×W bool, подделка = значение > 127"""
    try:
        with Image.open(path) as img:
            img = img.convert("L")
            if size is not None and img.size != (size[1], size[0]):
                img = img.resize((size[1], size[0]), Image.NEAREST)
            return np.asarray(img) > 127
    except OSError as e:
        raise DatasetIOError(f"Не удалось прочитать маску ({e})", str(path))


def write_sample(root: Path, split: str, sample_id: str, sample: TamperSample) -> SampleRecord:
    image_rel = f"{split}/images/{sample_id}.png"
    mask_rel = f"{split}/masks/{sample_id}.png"
    save_image(root / image_rel, sample.image)
    save_mask(root / mask_rel, sample.mask)
    return SampleRecord(
        sample_id=sample_id,
        split=split,
        image=image_rel,
        mask=mask_rel,
        tamper_type=sample.tamper_type,
        seed=sample.seed,
        object_aligned=sample.object_aligned
    )


def write_manifest(manifest: DatasetManifest) -> Path:
    path = Path(manifest.root) / MANIFEST_NAME
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest.model_dump(mode="json"), f, indent=2, ensure_ascii=False)
    except OSError as e:
        raise DatasetIOError(f"Не удалось записать манифест ({e})", str(path))
    return path


def write_dataset(root, samples: Iterable[Tuple[str, str, TamperSample]],
                  seed: Optional[int] = None,
                  image_size: Optional[Tuple[int, int]] = None) -> DatasetManifest:
    """
    Записывает образцы и манифест

    Args:
        root: Корень датасета
        samples: Тройки (split, sample_id, TamperSample)
        seed: Зерно генерации (для манифеста)
        image_size: (H, W)

    Returns:
        DatasetManifest
    """
    root = Path(root)
    records = []
    for split, sample_id, sample in samples:
        if split not in SPLITS:
            raise DatasetIOError(f"Неизвестный сплит {split}", str(root))
        records.append(write_sample(root, split, sample_id, sample))

    manifest = DatasetManifest(
        root=str(root),
        image_size=image_size,
        seed=seed,
        generated_at=datetime.now().isoformat(timespec="seconds"),
        records=records
    )
    write_manifest(manifest)
    app_logger.info(f"Датасет записан: {root} ({len(records)} образцов, {manifest.counts()})")
    return manifest


def read_manifest(root) -> DatasetManifest:
    """Читает manifest.json и проверяет, что все файлы записей существуют"""
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.exists():
        raise DatasetIOError("Не найден манифест датасета", str(path))
    try:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        payload["root"] = str(root)
        manifest = DatasetManifest(**payload)
    except (json.JSONDecodeError, ValidationError) as e:
        raise DatasetIOError(f"Повреждённый манифест ({e})", str(path))

    for record in manifest.records:
        for rel in (record.image, record.mask):
            if not (root / rel).exists():
                raise DatasetIOError("Файл из манифеста отсутствует", str(root / rel))
    return manifest


def iter_samples(manifest: DatasetManifest, split: Optional[str] = None,
                 size: Optional[Tuple[int, int]] = None) -> Iterator[Tuple[SampleRecord, np.ndarray, np.ndarray]]:
    root = Path(manifest.root)
    records = manifest.records if split is None else manifest.split_records(split)
    for record in records:
        yield record, load_image(root / record.image, size), load_mask(root / record.mask, size)


def read_dataset(root, split: Optional[str] = None
                 ) -> Tuple[DatasetManifest, Iterator[Tuple[SampleRecord, np.ndarray, np.ndarray]]]:
    """Манифест и ленивый итератор (запись, изображение, маска)"""
    manifest = read_manifest(root)
    return manifest, iter_samples(manifest, split)


class TamperDataset(Dataset):
    """
    Сплит датасета для torch: (изображение 3×H×W, маска 1×H×W) float32

    Искажение, если задано, применяется к изображению, маска не меняется.
    """

    def __init__(self, root, split: str = "train", input_size: Optional[Tuple[int, int]] = None,
                 perturbation: Optional[PerturbSpec] = None, seed: int = 0):
        if split not in SPLITS:
            raise DatasetIOError(f"Неизвестный сплит {split}", str(root))
        self.manifest = read_manifest(root)
        self.root = Path(root)
        self.split = split
        self.records = self.manifest.split_records(split)
        self.input_size = tuple(input_size) if input_size is not None else None
        self.perturbation = perturbation or PerturbSpec()
        self.seed = seed
        app_logger.debug(f"TamperDataset инициализирован: {root}/{split}, {len(self.records)} образцов")

    def __len__(self) -> int:
        return len(self.records)

    def sample_id(self, index: int) -> str:
        return self.records[index].sample_id

    def load_arrays(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """Изображение H×W×3 (после искажения) и маска H×W bool"""
        record = self.records[index]
        image = load_image(self.root / record.image, self.input_size)
        mask = load_mask(self.root / record.mask, self.input_size)
        if self.perturbation.kind != "none":
            image = perturb(image, self.perturbation, seed=self.seed + record.seed)
        return image, mask

    def __getitem__(self, index: int) -> Tuple[torch.Tensor, torch.Tensor]:
        image, mask = self.load_arrays(index)
        image_tensor = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1))).float()
        mask_tensor = torch.from_numpy(mask.astype(np.float32))[None]
        return image_tensor, mask_tensor
