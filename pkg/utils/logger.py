"""
Модуль настройки логирования для Mesorch Lab
"""
import os
import sys
from dotenv import load_dotenv
from loguru import logger
from tqdm import tqdm

load_dotenv()

def setup_logger():
    """Настройка системы логирования"""

    # Получаем уровень логирования из переменных окружения
    log_level = os.getenv("LOG_LEVEL", "INFO")
    debug = os.getenv("DEBUG", "False").lower() == "true"
    log_dir = os.getenv("MESORCH_LOG_DIR", "logs")

    # Удаляем стандартный обработчик loguru
    logger.remove()

    # Консоль - stderr, чтобы stdout команд оставался чистым
    if debug:
        logger.add(
            sink=sys.stderr,
            format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
            level=log_level,
            colorize=True
        )
    else:
        logger.add(
            sink=sys.stderr,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {message}",
            level=log_level,
            colorize=False
        )

    # Общий лог в файл
    logger.add(
        os.path.join(log_dir, "mesorch.log"),
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        level=log_level,
        rotation="10 MB",
        retention="30 days",
        compression="zip",
        encoding="utf-8"
    )

    # Отдельный файл для ошибок
    logger.add(
        os.path.join(log_dir, "errors.log"),
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
        level="ERROR",
        rotation="5 MB",
        retention="60 days",
        compression="zip",
        encoding="utf-8"
    )

    # Отдельный файл для шагов обучения (lr, loss)
    logger.add(
        os.path.join(log_dir, "training.log"),
        format="{time:YYYY-MM-DD HH:mm:ss} | {extra[run]} | {extra[step]} | {message}",
        filter=lambda record: "training" in record["extra"],
        level="DEBUG",
        rotation="50 MB",
        retention="90 days",
        compression="zip",
        encoding="utf-8"
    )

    logger.debug("Система логирования инициализирована")
    return logger

def log_training_step(run: str, step: int, lr: float, loss: float):
    """
    Логирование шага оптимизатора

    Args:
        run: Имя запуска (обычно каталог вывода)
        step: Номер шага оптимизатора
        lr: Скорость обучения на этом шаге
        loss: Значение лосса
    """
    logger.bind(training=True, run=run, step=step).debug(f"lr={lr:.3e} loss={loss:.6f}")

def progress(iterable=None, **kwargs) -> tqdm:
    """
    Прогресс-бар tqdm; скрыт, если DEBUG выключен и stderr - не терминал

    Args:
        iterable: Итерируемый объект
        **kwargs: Параметры tqdm (desc, total, leave)
    """
    debug = os.getenv("DEBUG", "False").lower() == "true"
    return tqdm(iterable, disable=not (debug or sys.stderr.isatty()), **kwargs)

# Создаем экземпляр логгера для использования в других модулях
app_logger = setup_logger()
