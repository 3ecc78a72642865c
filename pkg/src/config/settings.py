"""
Слоистая конфигурация запуска: пресет -> JSON-файл -> переопределения --set
"""
import json
import os
import platform
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import PIL
import torch
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from src import __version__
from src.errors import ConfigError
from src.model.config import MesorchConfig, paper_model_config, toy_model_config
from src.pruning.pruner import PruneConfig
from src.synthdata.builder import DEFAULT_SPLIT_FRACTIONS
from src.training.optim import TrainConfig
from utils.logger import app_logger

load_dotenv()

PRESETS = ("toy", "paper")


class DataConfig(BaseModel):
    """Параметры синтетического датасета"""
    model_config = ConfigDict(extra="forbid")

    count: int = 200
    size: Tuple[int, int] = (64, 64)
    split_fractions: Tuple[float, float, float, float] = DEFAULT_SPLIT_FRACTIONS
    workers: int = 1

    @field_validator("count")
    @classmethod
    def _count_min(cls, value: int) -> int:
        if value < 4:
            raise ValueError(f"count должен быть не меньше 4, получено {value}")
        return value


class RunConfig(BaseModel):
    """
    Полная конфигурация запуска

    Зерно верхнего уровня единственное: оно же становится train.seed.
    """
    model_config = ConfigDict(extra="forbid")

    preset: Literal["toy", "paper"] = "toy"
    seed: int = 0
    threshold: float = 0.5
    model: MesorchConfig
    train: TrainConfig
    prune: PruneConfig = PruneConfig()
    data: DataConfig = DataConfig()

    @model_validator(mode="after")
    def _sync(self) -> "RunConfig":
        if tuple(self.train.input_size) != tuple(self.model.input_size):
            raise ValueError(
                f"train.input_size {self.train.input_size} не совпадает с model.input_size {self.model.input_size}"
            )
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold должен лежать в (0, 1), получено {self.threshold}")
        self.train.seed = self.seed
        return self


def preset_values(preset: str) -> Dict[str, Any]:
    """Значения встроенного пресета в виде словаря"""
    if preset == "toy":
        return {
            "preset": "toy",
            "model": toy_model_config().model_dump(mode="json"),
            "train": TrainConfig(epochs=30, batch_size=8, lr_max=1e-3, input_size=(64, 64)).model_dump(mode="json"),
            "prune": PruneConfig().model_dump(mode="json"),
            "data": DataConfig().model_dump(mode="json"),
        }
    if preset == "paper":
        return {
            "preset": "paper",
            "model": paper_model_config().model_dump(mode="json"),
            "train": TrainConfig(epochs=150, batch_size=12, input_size=(512, 512)).model_dump(mode="json"),
            "prune": PruneConfig().model_dump(mode="json"),
            "data": DataConfig(size=(512, 512)).model_dump(mode="json"),
        }
    raise ConfigError(f"Неизвестный пресет {preset}, ожидается один из {PRESETS}")


def deep_merge(base: Dict, update: Dict) -> Dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_override(text: str) -> Dict:
    """'train.epochs=5' -> {'train': {'epochs': 5}}; значение - JSON или строка"""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Переопределение должно иметь вид section.key=value: '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    result: Dict = value
    for part in reversed(key.strip().split(".")):
        result = {part: result}
    return result


def load_run_config(preset: str = "toy", config_file: Optional[str] = None,
                    overrides: Optional[Sequence[str]] = None, seed: Optional[int] = None) -> RunConfig:
    """
    Собирает RunConfig из слоёв

    Args:
        preset: toy | paper
        config_file: JSON-файл с частичной конфигурацией
        overrides: Строки section.key=value
        seed: Зерно (имеет приоритет над всеми слоями)

    Returns:
        RunConfig
    """
    values = preset_values(preset)
    if config_file:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"Файл конфигурации не найден: {path}")
        try:
            with open(path, encoding="utf-8") as f:
                values = deep_merge(values, json.load(f))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Некорректный JSON в {path}: {e}")
    for text in overrides or []:
        values = deep_merge(values, parse_override(text))
    if seed is not None:
        values["seed"] = seed

    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Некорректная конфигурация: {e}")


def derive_model_config(base: MesorchConfig, **updates) -> MesorchConfig:
    """Копия конфигурации модели с изменёнными полями, с повторной проверкой"""
    try:
        return MesorchConfig(**{**base.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(f"Некорректная конфигурация модели: {e}")


def with_model_config(run_config: RunConfig, model: MesorchConfig) -> RunConfig:
    """RunConfig, в котором модель (и train.input_size) взяты из чекпоинта"""
    values = run_config.model_dump(mode="json")
    values["model"] = model.model_dump(mode="json")
    values["train"]["input_size"] = list(model.input_size)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Некорректная конфигурация: {e}")


def version_stamp() -> Dict[str, str]:
    return {
        "mesorch_lab": __version__,
        "python": platform.python_version(),
        "torch": torch.__version__,
        "numpy": np.__version__,
        "pillow": PIL.__version__,
    }


def write_run_echo(out_dir, run_config: RunConfig, command: str, extra: Optional[Dict] = None) -> List[Path]:
    """Пишет resolved_config.json и version.json до начала работы"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {"command": command, **run_config.model_dump(mode="json")}
    if extra:
        resolved["arguments"] = extra
    paths = [out_dir / "resolved_config.json", out_dir / "version.json"]
    with open(paths[0], "w", encoding="utf-8") as f:
        json.dump(resolved, f, indent=2, ensure_ascii=False)
    with open(paths[1], "w", encoding="utf-8") as f:
        json.dump(version_stamp(), f, indent=2)
    return paths


def configure_threads():
    """MESORCH_NUM_THREADS ограничивает число потоков torch"""
    value = os.getenv("MESORCH_NUM_THREADS")
    if not value:
        return
    try:
        threads = int(value)
    except ValueError:
        app_logger.warning(f"MESORCH_NUM_THREADS={value} не число, игнорирую")
        return
    if threads > 0:
        torch.set_num_threads(threads)
        app_logger.debug(f"torch использует {threads} потоков")
