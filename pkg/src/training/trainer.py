"""
Цикл обучения: AdamW, накопление градиентов, косинусное расписание, чекпоинты
"""
import csv
import math
from pathlib import Path
from typing import List, Optional

import torch
from torch.utils.data import DataLoader, Dataset

from src.errors import InvalidInputError, TrainingDivergedError
from src.model.mesorch import MesorchNet
from src.training.losses import mask_bce_loss
from src.training.optim import TrainConfig, set_lr
from src.training.schedule import lr_at
from src.training.state import TrainState, save_checkpoint
from utils.logger import app_logger, log_training_step, progress


def steps_per_epoch(num_samples: int, config: TrainConfig) -> int:
    micro_batches = math.ceil(num_samples / config.batch_size)
    return math.ceil(micro_batches / config.accumulation_steps)


def total_steps(num_samples: int, config: TrainConfig) -> int:
    return steps_per_epoch(num_samples, config) * config.epochs


def configure_determinism(config: TrainConfig):
    if config.deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False


def epoch_loader(dataset: Dataset, config: TrainConfig, epoch: int) -> DataLoader:
    """Порядок образцов зависит только от (seed, epoch)"""
    generator = torch.Generator()
    generator.manual_seed(config.seed + epoch)
    return DataLoader(dataset, batch_size=config.batch_size, shuffle=True, generator=generator, num_workers=0)


def accumulate_step(model: MesorchNet, micro_batches: List[tuple]) -> float:
    """
    Прямой и обратный проход по группе микро-батчей

    Лосс микро-батча i масштабируется на n_i / N группы, так что
    накопленный градиент равен градиенту среднего лосса по объединению.

    Returns:
        Средний лосс группы
    """
    group_size = sum(images.shape[0] for images, _ in micro_batches)
    total = 0.0
    for images, masks in micro_batches:
        output = model(images)
        loss = mask_bce_loss(output.final.full, masks)
        weight = images.shape[0] / group_size
        (loss * weight).backward()
        total += loss.item() * weight
    return total


def write_loss_trace(path: Path, loss_trace: List[List[float]]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "lr", "loss"])
        for step, lr, loss in loss_trace:
            writer.writerow([int(step), lr, loss])


def train_loop(
    model: MesorchNet,
    dataset: Dataset,
    config: TrainConfig,
    out_dir=None,
    state: Optional[TrainState] = None,
    run_name: str = "train"
) -> TrainState:
    """
    Обучает модель до config.epochs эпох

    Args:
        model: Модель (игнорируется, если передан state)
        dataset: Датасет пар (изображение, маска)
        config: TrainConfig
        out_dir: Каталог для чекпоинтов и loss_trace.csv; None - без записи
        state: Состояние для продолжения обучения
        run_name: Имя запуска в training.log

    Returns:
        Итоговый TrainState
    """
    if len(dataset) == 0:
        raise InvalidInputError("Пустой датасет для обучения")
    configure_determinism(config)

    if state is None:
        torch.manual_seed(config.seed)
        state = TrainState.fresh(model, config)
    elif state.rng_state is not None:
        torch.set_rng_state(state.rng_state)
    model = state.model.train()
    optimizer = state.optimizer

    out_dir = Path(out_dir) if out_dir is not None else None
    total = total_steps(len(dataset), config)
    app_logger.info(
        f"Обучение: {len(dataset)} образцов, эпох={config.epochs}, шагов={total}, "
        f"микро-батч={config.batch_size}×{config.accumulation_steps}, старт с эпохи {state.epoch}"
    )

    for epoch in range(state.epoch, config.epochs):
        pending: List[tuple] = []
        loader = epoch_loader(dataset, config, epoch)
        bar = progress(loader, desc=f"Эпоха {epoch + 1}/{config.epochs}", leave=False)
        for index, (images, masks) in enumerate(bar):
            pending.append((images, masks))
            if len(pending) < config.accumulation_steps and index < len(loader) - 1:
                continue

            lr = lr_at(state.step + 1, total, config)
            set_lr(optimizer, lr)
            optimizer.zero_grad(set_to_none=True)
            loss = accumulate_step(model, pending)
            pending = []

            if not math.isfinite(loss):
                snapshot = None
                if out_dir is not None:
                    snapshot = out_dir / "diverged"
                    state.rng_state = torch.get_rng_state()
                    save_checkpoint(state, snapshot)
                app_logger.error(f"Лосс стал {loss} на шаге {state.step + 1}, эпоха {epoch + 1}")
                raise TrainingDivergedError(
                    f"Лосс {loss} на шаге {state.step + 1}", snapshot_path=str(snapshot) if snapshot else None
                )

            optimizer.step()
            state.step += 1
            state.loss_trace.append([state.step, lr, loss])
            log_training_step(run_name, state.step, lr, loss)
            bar.set_postfix(loss=f"{loss:.4f}", lr=f"{lr:.2e}")

        state.epoch = epoch + 1
        state.rng_state = torch.get_rng_state()
        epoch_loss = [row[2] for row in state.loss_trace[-steps_per_epoch(len(dataset), config):]]
        app_logger.info(f"Эпоха {state.epoch}/{config.epochs}: средний лосс {sum(epoch_loss) / len(epoch_loss):.4f}")

        if out_dir is not None:
            write_loss_trace(out_dir / "loss_trace.csv", state.loss_trace)
            if state.epoch % config.checkpoint_every == 0 or state.epoch == config.epochs:
                save_checkpoint(state, out_dir / "checkpoints" / f"epoch_{state.epoch:03d}")

    return state
