"""Windowed 1D-CNN state-of-charge estimation with cross-cell transfer."""

from .data import (DatasetManifest, DriveCycle, NormStats, RecipeSplit,
                   assemble_recipe, default_manifest, derive_soc, downsample,
                   fit_norm, apply_norm, inject_noise_a, inject_noise_b,
                   load_cycle, make_windows, save_cycle, subsample_cycles)
from .model import (ArchSpec, CnnModel, ModelFormatError, SpecMismatchError,
                    build_model, load_model, save_model)
from .numerics import Rng
from .synth import PRESETS, SynthCellSpec, generate_dataset, synth_generate
from .training import (AdamState, EarlyStopper, MetricsReport, TrainConfig,
                       TrainReport, adam_step, evaluate, mae, max_err, mse_loss,
                       train, transfer_init)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "ArchSpec", "CnnModel", "DatasetManifest", "DriveCycle",
    "EarlyStopper", "MetricsReport", "ModelFormatError", "NormStats", "PRESETS",
    "RecipeSplit", "Rng", "SpecMismatchError", "SynthCellSpec", "TrainConfig",
    "TrainReport", "adam_step", "apply_norm", "assemble_recipe", "build_model",
    "default_manifest", "derive_soc", "downsample", "evaluate", "fit_norm",
    "generate_dataset", "inject_noise_a", "inject_noise_b", "load_cycle",
    "load_model", "mae", "make_windows", "max_err", "mse_loss", "save_cycle",
    "save_model", "subsample_cycles", "synth_generate", "train", "transfer_init",
]
