"""
Mesorch Lab - локализация манипуляций на изображениях
"""

__version__ = "1.0.0"
__description__ = "Гибридная CNN+Transformer модель локализации подделок с DCT-входами, адаптивным слиянием масштабов и прунингом"
