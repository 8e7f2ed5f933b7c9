"""Data model, synthetic generation, manifest I/O, and preprocessing."""

from .manifest import MANIFEST_COLUMNS, load_manifest, save_dataset
from .preprocess import bilinear_resize, preprocess
from .samples import FAKE_CLASS_ID, Dataset, Sample, build_dataset
from .synthetic import SyntheticParams, generate_synthetic_dataset

__all__ = [
    "FAKE_CLASS_ID",
    "Sample",
    "Dataset",
    "build_dataset",
    "SyntheticParams",
    "generate_synthetic_dataset",
    "MANIFEST_COLUMNS",
    "save_dataset",
    "load_manifest",
    "bilinear_resize",
    "preprocess",
]
