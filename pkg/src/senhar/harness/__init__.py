from senhar.harness.checkpoint import checkpoint_load, checkpoint_save, load_sen, save_sen
from senhar.harness.config import ExperimentConfig, load_config
from senhar.harness.experiments import (prepare_data, run_classification, run_denoise, run_noise_robustness,
                                        run_stress)
from senhar.harness.gradsuite import run_gradcheck_suite

__all__ = [
    "ExperimentConfig",
    "checkpoint_load",
    "checkpoint_save",
    "load_config",
    "load_sen",
    "prepare_data",
    "run_classification",
    "run_denoise",
    "run_gradcheck_suite",
    "run_noise_robustness",
    "run_stress",
    "save_sen",
]
