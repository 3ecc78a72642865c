"""
Импорт внешнего бенчмарка (пары изображение/маска) в формат датасета

Ожидаемая раскладка: images_dir/<stem>.<ext> и masks_dir/<stem>[_gt|_mask].<ext>.
Данные бенчмарков не поставляются.
"""
from pathlib import Path
from typing import Dict, Optional, Tuple

from src.errors import DatasetIOError
from src.synthdata.dataset_store import (
    MANIFEST_NAME,
    SPLITS,
    DatasetManifest,
    SampleRecord,
    load_image,
    load_mask,
    read_manifest,
    save_image,
    save_mask,
    write_manifest,
)
from utils.logger import app_logger

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")
MASK_STEM_SUFFIXES = ("_gt", "_mask")


def _mask_key(stem: str) -> str:
    for suffix in MASK_STEM_SUFFIXES:
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def _index_files(directory: Path) -> Dict[str, Path]:
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in IMAGE_SUFFIXES}


def import_benchmark_folder(images_dir, masks_dir, out_root, split: str = "test",
                            size: Optional[Tuple[int, int]] = None) -> DatasetManifest:
    """
    Сопоставляет изображения и маски по имени и пишет их как сплит датасета

    Args:
        images_dir: Каталог изображений
        masks_dir: Каталог масок
        out_root: Корень датасета (манифест дополняется, если уже существует)
        split: Сплит назначения
        size: (H, W) для ресайза или None

    Returns:
        DatasetManifest
    """
    images_dir, masks_dir, out_root = Path(images_dir), Path(masks_dir), Path(out_root)
    if split not in SPLITS:
        raise DatasetIOError(f"Неизвестный сплит {split}", str(out_root))
    for directory in (images_dir, masks_dir):
        if not directory.is_dir():
            raise DatasetIOError("Каталог не найден", str(directory))

    images = _index_files(images_dir)
    masks = {_mask_key(stem): path for stem, path in _index_files(masks_dir).items()}

    if (out_root / MANIFEST_NAME).exists():
        manifest = read_manifest(out_root)
    else:
        out_root.mkdir(parents=True, exist_ok=True)
        manifest = DatasetManifest(root=str(out_root), image_size=size)

    known = {r.sample_id for r in manifest.records}
    imported = skipped = 0
    for stem, image_path in images.items():
        mask_path = masks.get(stem)
        if mask_path is None:
            app_logger.warning(f"Нет маски для {image_path.name}, пропускаю")
            skipped += 1
            continue
        sample_id = stem if stem not in known else f"{split}_{stem}"
        image_rel = f"{split}/images/{sample_id}.png"
        mask_rel = f"{split}/masks/{sample_id}.png"
        save_image(out_root / image_rel, load_image(image_path, size))
        save_mask(out_root / mask_rel, load_mask(mask_path, size))
        manifest.records.append(SampleRecord(
            sample_id=sample_id, split=split, image=image_rel, mask=mask_rel,
            tamper_type="external", seed=-1
        ))
        known.add(sample_id)
        imported += 1

    write_manifest(manifest)
    app_logger.info(f"Импортировано {imported} пар из {images_dir} в {out_root}/{split}, пропущено {skipped}")
    return manifest
