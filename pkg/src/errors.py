"""
Типы ошибок Mesorch Lab
"""
from typing import Dict, Optional


class MesorchError(Exception):
    """Базовая ошибка пакета"""

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def with_stage(self, stage: str) -> "MesorchError":
        """Привязывает ошибку к этапу прямого прохода (первый этап побеждает)"""
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class ConfigError(MesorchError):
    """Некорректная конфигурация или несовпадение с ней"""


class InvalidInputError(MesorchError):
    """Некорректные входные данные (форма, NaN, пустой набор)"""


class NotApplicableError(MesorchError):
    """Операция не применима к текущему состоянию модели"""


class CheckpointError(MesorchError):
    """Повреждённый или несовместимый чекпоинт"""

    def __init__(self, message: str, diff: Optional[Dict] = None):
        super().__init__(message)
        self.diff = diff or {}

    def __str__(self) -> str:
        if not self.diff:
            return self.message
        lines = [f"  {key}: {value}" for key, value in sorted(self.diff.items())]
        return self.message + "\n" + "\n".join(lines)


class TamperGenerationError(MesorchError):
    """Генератор не смог построить допустимую область подделки"""


class DatasetIOError(MesorchError):
    """Ошибка чтения/записи датасета"""

    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path


class TrainingDivergedError(MesorchError):
    """Лосс стал NaN/Inf, обучение остановлено"""

    def __init__(self, message: str, snapshot_path: Optional[str] = None):
        super().__init__(message)
        self.snapshot_path = snapshot_path


class UsageError(MesorchError):
    """Нарушено предусловие команды CLI (код выхода 2)"""
