"""
Модуль частотного разложения (DCT)
"""
from src.frequency.dct import (
    DEFAULT_CUTOFF,
    EnhancedInput,
    FrequencyPair,
    dct2,
    idct2,
    frequency_masks,
    make_enhanced_inputs,
    split_frequencies,
)
