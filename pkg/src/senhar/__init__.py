"""Similarity-embedding networks for human activity recognition, on a small numpy autodiff core."""

from senhar.classifiers import compute_class_centers, predict_knn, predict_mlp, predict_sm
from senhar.datasets import SampleSet, synth_dataset
from senhar.metrics import MetricsReport, metrics
from senhar.network import SENConfig, SENWeights, embed, embed_batch, forward, init_network
from senhar.pairwise import TrainConfig, pair_probability, pairwise_loss, train_sen
from senhar.signal import RawSample, tensorize, tensorize_many

__version__ = "0.1.0"

__all__ = [
    "MetricsReport",
    "RawSample",
    "SENConfig",
    "SENWeights",
    "SampleSet",
    "TrainConfig",
    "compute_class_centers",
    "embed",
    "embed_batch",
    "forward",
    "init_network",
    "metrics",
    "pair_probability",
    "pairwise_loss",
    "predict_knn",
    "predict_mlp",
    "predict_sm",
    "synth_dataset",
    "tensorize",
    "tensorize_many",
    "train_sen",
]
