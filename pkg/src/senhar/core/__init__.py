"""Minimal float64 tensor engine with reverse-mode differentiation."""

from senhar.core.functional import (
    LSTMWeights,
    activation,
    conv1d,
    cross_entropy,
    dense,
    lstm_step,
)
from senhar.core.gradcheck import grad_check, numerical_grad
from senhar.core.optim import OptimizerState, optimizer_step
from senhar.core.tensor import Tape, Tensor, backward

__all__ = [
    "LSTMWeights",
    "OptimizerState",
    "Tape",
    "Tensor",
    "activation",
    "backward",
    "conv1d",
    "cross_entropy",
    "dense",
    "grad_check",
    "lstm_step",
    "numerical_grad",
    "optimizer_step",
]
