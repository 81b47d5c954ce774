"""Finite-difference validation of tape gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from senhar.core.tensor import Tape, Tensor
from senhar.errors import ContractError


def numerical_grad(fn: Callable[[], Tensor], x: Tensor, eps: float) -> np.ndarray:
    """Central differences of the scalar ``fn()`` w.r.t. every entry of ``x``."""
    grad = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        hi, lo = orig + eps, orig - eps
        flat[i] = hi
        fp = fn().item()
        flat[i] = lo
        fm = fn().item()
        flat[i] = orig
        # divide by the step actually taken, not the nominal 2*eps
        gflat[i] = (fp - fm) / (hi - lo)
    return grad


def grad_check(fn: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-6,
               per: str = "tensor", floor: float = 1e-8) -> float:
    """Worst relative error between tape gradients and central differences.

    ``fn(*inputs)`` must return a scalar tensor. With ``per="tensor"`` the
    error of one input is ``||analytic - numeric|| / max(||analytic||, ||numeric||)``
    (0 when both vanish). ``per="coordinate"`` uses
    ``|a - n| / max(|a|, |n|, floor)`` entry by entry, which is dominated by
    roundoff wherever the true derivative is zero or tiny (dead ReLUs).
    """
    if not 0 < eps <= 1e-2:
        raise ContractError(f"eps must lie in (0, 1e-2], got {eps}")
    if per not in ("tensor", "coordinate"):
        raise ContractError(f"per must be 'tensor' or 'coordinate', got {per!r}")
    for x in inputs:
        x.requires_grad = True
        x.grad = None
    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)
    analytic = [np.zeros_like(x.data) if x.grad is None else x.grad.copy() for x in inputs]

    worst = 0.0
    for x, a in zip(inputs, analytic):
        n = numerical_grad(lambda: fn(*inputs), x, eps)
        if per == "tensor":
            scale = max(np.linalg.norm(a), np.linalg.norm(n))
            err = np.linalg.norm(a - n) / scale if scale > 0 else 0.0
        else:
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            err = float((np.abs(a - n) / denom).max()) if a.size else 0.0
        worst = max(worst, float(err))
    return worst
