"""
Обучение Mesorch: лосс, расписание, AdamW, чекпоинты
"""
from src.training.gradcheck import GradCheckResult, finite_difference_check, gradcheck_model_config
from src.training.losses import mask_bce_loss
from src.training.optim import TrainConfig, make_optimizer, param_groups
from src.training.schedule import lr_at, warmup_steps
from src.training.state import TrainState, load_checkpoint, save_checkpoint
from src.training.trainer import accumulate_step, total_steps, train_loop
