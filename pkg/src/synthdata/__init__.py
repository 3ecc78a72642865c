"""
Синтетические данные: генератор подделок, искажения, хранение на диске
"""
from src.synthdata.builder import DEFAULT_SPLIT_FRACTIONS, generate_dataset, split_counts
from src.synthdata.dataset_store import (
    SPLITS,
    DatasetManifest,
    SampleRecord,
    TamperDataset,
    read_dataset,
    write_dataset,
)
from src.synthdata.generator import (
    TAMPER_TYPES,
    TamperSample,
    gen_base_image,
    gen_copy_move,
    gen_inpaint,
    gen_scene,
    gen_splice,
    generate_sample,
)
from src.synthdata.perturbations import PerturbSpec, perturb, robustness_grid
