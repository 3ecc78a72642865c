#!/usr/bin/env python3
"""
Главный файл запуска Mesorch Lab

Примеры:
    python main.py gen-data --out data/toy --count 200 --seed 7
    python main.py train --data data/toy --out runs/toy
    python main.py prune --checkpoint runs/toy/checkpoints/epoch_030 --calibration data/toy --out runs/toy_p
    python main.py flops --preset paper --size 512
"""
import sys

from src.cli.commands import run


def main() -> int:
    """Основная функция запуска"""
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
