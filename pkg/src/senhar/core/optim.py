"""SGD and Adam updates over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from senhar.core.tensor import Tensor
from senhar.errors import ConfigurationError, DimensionError, NumericError


@dataclass
class OptimizerState:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.kind!r}")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be non-negative")


def optimizer_step(params: Mapping[str, Tensor], state: OptimizerState,
                   grads: Mapping[str, np.ndarray] | None = None) -> OptimizerState:
    """Update ``params`` in place from ``grads`` (default: each ``.grad``).

    Parameters without a gradient are skipped. Every gradient is validated
    before any parameter is touched.
    """
    if grads is None:
        grads = {name: p.grad for name, p in params.items() if p.grad is not None}
    for name, g in grads.items():
        if name not in params:
            raise DimensionError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise DimensionError(f"gradient for {name!r} has shape {g.shape}, parameter has {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")

    state.step_count += 1
    lr = state.learning_rate
    if state.kind == "sgd":
        for name, g in grads.items():
            params[name].data -= lr * g
        return state

    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name, g in grads.items():
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        params[name].data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state
