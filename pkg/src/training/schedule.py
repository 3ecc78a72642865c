"""
Косинусное расписание скорости обучения с линейным прогревом
"""
import math


def warmup_steps(total_steps: int, warmup_epochs: float, epochs: int) -> int:
    """Число шагов прогрева, пропорциональное доле эпох прогрева"""
    if epochs <= 0 or total_steps <= 0:
        return 0
    return min(total_steps, int(round(total_steps * warmup_epochs / epochs)))


def lr_at(step: int, total_steps: int, config) -> float:
    """
    Скорость обучения на шаге step

    Прогрев: линейно 0 -> lr_max. Затем lr_min + ½(lr_max − lr_min)(1 + cos(π·progress)).

    Args:
        step: Номер шага, 0 <= step <= total_steps
        total_steps: Всего шагов оптимизатора
        config: TrainConfig (lr_max, lr_min, warmup_epochs, epochs)

    Returns:
        Скорость обучения
    """
    step = max(0, min(step, total_steps))
    warmup = warmup_steps(total_steps, config.warmup_epochs, config.epochs)

    if step < warmup:
        return config.lr_max * step / warmup
    if step == warmup:
        return config.lr_max
    if step == total_steps:
        return config.lr_min

    progress = (step - warmup) / (total_steps - warmup)
    return config.lr_min + 0.5 * (config.lr_max - config.lr_min) * (1.0 + math.cos(math.pi * progress))
