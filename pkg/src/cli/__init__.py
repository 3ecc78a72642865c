"""
Командная строка Mesorch Lab
"""
from src.cli.commands import build_parser, run
