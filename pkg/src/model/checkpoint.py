"""
Формат чекпоинта: каталог с manifest.json и бинарным блобом на каждый тензор

Блобы - little-endian float32, row-major, имя файла - путь параметра.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from src import __version__
from src.errors import CheckpointError, ConfigError
from src.model.config import MesorchConfig
from src.model.mesorch import MesorchNet
from utils.logger import app_logger

CHECKPOINT_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
BLOB_DTYPE = "<f4"


@dataclass
class CheckpointData:
    """Содержимое чекпоинта после чтения"""
    model: MesorchNet
    manifest: Dict
    optimizer_state: Dict[str, Dict[str, torch.Tensor]] = field(default_factory=dict)
    loss_trace: List[List[float]] = field(default_factory=list)
    rng_state: Optional[torch.Tensor] = None

    @property
    def step(self) -> int:
        return int(self.manifest.get("step", 0))

    @property
    def epoch(self) -> int:
        return int(self.manifest.get("epoch", 0))

    @property
    def seed(self) -> int:
        return int(self.manifest.get("seed", 0))


def _write_blob(path: Path, tensor: torch.Tensor):
    path.parent.mkdir(parents=True, exist_ok=True)
    array = tensor.detach().cpu().to(torch.float32).contiguous().numpy().astype(BLOB_DTYPE, copy=False)
    array.tofile(str(path))


def _read_blob(path: Path, shape: List[int]) -> torch.Tensor:
    if not path.exists():
        raise CheckpointError(f"Отсутствует блоб тензора: {path}")
    expected = int(np.prod(shape)) if shape else 1
    array = np.fromfile(str(path), dtype=BLOB_DTYPE)
    if array.size != expected:
        raise CheckpointError(
            f"Повреждённый блоб {path}",
            diff={"elements_expected": expected, "elements_found": int(array.size)}
        )
    return torch.from_numpy(array.astype(np.float32).reshape(shape))


def write_checkpoint(
    path,
    model: MesorchNet,
    step: int = 0,
    epoch: int = 0,
    seed: int = 0,
    optimizer: Optional[torch.optim.Optimizer] = None,
    loss_trace: Optional[List[List[float]]] = None,
    rng_state: Optional[torch.Tensor] = None,
    extra: Optional[Dict] = None
) -> Path:
    """
    Сохраняет модель (и при наличии состояние оптимизатора) в каталог

    Args:
        path: Каталог чекпоинта
        model: Модель
        step: Номер шага оптимизатора
        epoch: Число завершённых эпох
        seed: Зерно запуска
        optimizer: Оптимизатор AdamW (моменты сохраняются по имени параметра)
        loss_trace: Трасса [step, lr, loss]
        rng_state: Состояние torch RNG
        extra: Дополнительные поля манифеста

    Returns:
        Путь к каталогу
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    tensors = {}
    for name, tensor in model.state_dict().items():
        file_name = f"params/{name}.bin"
        _write_blob(root / file_name, tensor)
        tensors[name] = {"shape": list(tensor.shape), "file": file_name}

    optimizer_entries = {}
    if optimizer is not None:
        names = {id(p): n for n, p in model.named_parameters()}
        for param, state in optimizer.state.items():
            name = names.get(id(param))
            if name is None or not state:
                continue
            entry = {"step": float(state["step"])}
            for key in ("exp_avg", "exp_avg_sq"):
                file_name = f"optimizer/{name}.{key}.bin"
                _write_blob(root / file_name, state[key])
                entry[key] = file_name
            entry["shape"] = list(param.shape)
            optimizer_entries[name] = entry

    if rng_state is not None:
        rng_state.cpu().numpy().astype(np.uint8).tofile(str(root / "rng_state.bin"))

    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "tool_version": __version__,
        "config": model.config.model_dump(mode="json"),
        "config_hash": model.config.config_hash(),
        "active_branches": model.active_branches,
        "num_branches": model.config.num_branches,
        "seed": seed,
        "step": step,
        "epoch": epoch,
        "tensors": tensors,
        "optimizer": optimizer_entries,
        "loss_trace": loss_trace or [],
        "has_rng_state": rng_state is not None,
    }
    if extra:
        manifest["extra"] = extra
    with open(root / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, ensure_ascii=False)

    app_logger.info(f"Чекпоинт сохранён: {root} (step={step}, epoch={epoch})")
    return root


def _config_diff(expected: Dict, found: Dict) -> Dict:
    diff = {}
    for key in sorted(set(expected) | set(found)):
        if expected.get(key) != found.get(key):
            diff[key] = f"ожидалось {expected.get(key)!r}, в чекпоинте {found.get(key)!r}"
    return diff


def read_manifest(path) -> Dict:
    manifest_path = Path(path) / MANIFEST_NAME
    if not manifest_path.exists():
        raise CheckpointError(f"Не найден {MANIFEST_NAME} в {path}")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Повреждённый манифест {manifest_path}: {e}")


def read_checkpoint(path, expected_config: Optional[MesorchConfig] = None) -> CheckpointData:
    """
    Читает чекпоинт и восстанавливает модель

    Args:
        path: Каталог чекпоинта
        expected_config: Если задан, хеш конфигурации обязан совпасть

    Returns:
        CheckpointData
    """
    root = Path(path)
    manifest = read_manifest(root)

    version = manifest.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"Неподдерживаемая версия чекпоинта {root}",
            diff={"format_version": f"ожидалось {CHECKPOINT_FORMAT_VERSION}, в чекпоинте {version}"}
        )

    try:
        config = MesorchConfig(**manifest["config"])
    except Exception as e:
        raise CheckpointError(f"Конфигурация в чекпоинте {root} некорректна: {e}")

    if expected_config is not None and expected_config.config_hash() != manifest.get("config_hash"):
        raise CheckpointError(
            f"Хеш конфигурации не совпадает с чекпоинтом {root}",
            diff=_config_diff(expected_config.model_dump(mode="json"), manifest["config"])
        )

    model = MesorchNet(config)
    state = model.state_dict()
    missing = sorted(set(state) - set(manifest["tensors"]))
    unexpected = sorted(set(manifest["tensors"]) - set(state))
    if missing or unexpected:
        raise CheckpointError(
            f"Набор тензоров чекпоинта {root} не совпадает с архитектурой",
            diff={"missing": missing, "unexpected": unexpected}
        )
    loaded = {}
    for name, entry in manifest["tensors"].items():
        if list(state[name].shape) != list(entry["shape"]):
            raise CheckpointError(
                f"Форма тензора {name} не совпадает",
                diff={name: f"модель {list(state[name].shape)}, чекпоинт {entry['shape']}"}
            )
        loaded[name] = _read_blob(root / entry["file"], entry["shape"])
    model.load_state_dict(loaded)

    optimizer_state = {}
    for name, entry in manifest.get("optimizer", {}).items():
        optimizer_state[name] = {
            "step": torch.tensor(entry["step"], dtype=torch.float32),
            "exp_avg": _read_blob(root / entry["exp_avg"], entry["shape"]),
            "exp_avg_sq": _read_blob(root / entry["exp_avg_sq"], entry["shape"]),
        }

    rng_state = None
    if manifest.get("has_rng_state"):
        raw = np.fromfile(str(root / "rng_state.bin"), dtype=np.uint8)
        rng_state = torch.from_numpy(raw.copy())

    app_logger.info(f"Чекпоинт загружен: {root} (step={manifest.get('step')}, ветвей={config.num_branches})")
    return CheckpointData(
        model=model,
        manifest=manifest,
        optimizer_state=optimizer_state,
        loss_trace=[list(row) for row in manifest.get("loss_trace", [])],
        rng_state=rng_state
    )


def load_model(path, expected_config: Optional[MesorchConfig] = None) -> MesorchNet:
    """Только модель из чекпоинта, в режиме eval"""
    try:
        model = read_checkpoint(path, expected_config).model
    except ConfigError as e:
        raise CheckpointError(f"Некорректная конфигурация чекпоинта {path}: {e}")
    return model.eval()
