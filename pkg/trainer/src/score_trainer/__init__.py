"""score_trainer: train small denoiser MLPs and export BPDM weight files."""

from .datasets import blobs_images, gaussian_kernels, make_dataset, motion_kernels
from .export import (
    export_bpdm,
    forward,
    read_bpdm,
    read_test_vectors,
)
from .spec import ACTIVATIONS, DATASETS, SpecError, TrainSpec, load_spec
from .train import TrainedDenoiser, TrainingDivergedError, train_denoiser

__all__ = [
    "ACTIVATIONS",
    "DATASETS",
    "SpecError",
    "TrainSpec",
    "TrainedDenoiser",
    "TrainingDivergedError",
    "blobs_images",
    "export_bpdm",
    "forward",
    "gaussian_kernels",
    "load_spec",
    "make_dataset",
    "motion_kernels",
    "read_bpdm",
    "read_test_vectors",
    "train_denoiser",
]
