"""
Тесты Mesorch Lab
"""
