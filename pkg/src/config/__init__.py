"""
Конфигурация запусков Mesorch Lab
"""
from src.config.settings import (
    PRESETS,
    DataConfig,
    RunConfig,
    configure_threads,
    derive_model_config,
    load_run_config,
    parse_override,
    with_model_config,
    write_run_echo,
)
