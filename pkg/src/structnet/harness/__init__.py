"""Command-line harness: data files, model files, training, benchmarks."""

from .datasets import Dataset, load_idx, read_idx_file, synth_dataset
from .modelio import load_model, save_model
from .training import TrainConfig, train
from .benchmarks import BenchRecord, bench, records_to_csv

__all__ = [
    "Dataset",
    "load_idx",
    "read_idx_file",
    "synth_dataset",
    "load_model",
    "save_model",
    "TrainConfig",
    "train",
    "BenchRecord",
    "bench",
    "records_to_csv",
]
