"""Layer-level differentiable operations built on :mod:`senhar.core.tensor`."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from senhar.core import tensor as T
from senhar.core.tensor import Tensor, as_tensor, record_op
from senhar.errors import ContractError, DimensionError


def conv1d(x, filters, bias) -> Tensor:
    """Valid, stride-1 cross-correlation whose filters slide horizontally.

    ``x`` is ``[..., channels_in, height, width]`` (any leading batch axes);
    ``filters`` is ``[channels_out, channels_in, fh, fw]``. Because ``fh`` is
    normally the full height, the output height is ``height - fh + 1``.
    """
    x, filters, bias = as_tensor(x), as_tensor(filters), as_tensor(bias)
    X, W, b = x.data, filters.data, bias.data
    if X.ndim < 3:
        raise DimensionError(f"conv1d input needs [channels, height, width], got {X.shape}")
    if W.ndim != 4:
        raise DimensionError(f"conv1d filters need 4 axes, got {W.shape}")
    c_out, c_in, fh, fw = W.shape
    if X.shape[-3] != c_in:
        raise DimensionError(f"conv1d channels_in mismatch: input has {X.shape[-3]}, filters expect {c_in}")
    if fh > X.shape[-2]:
        raise DimensionError(f"conv1d height: filter height {fh} exceeds input height {X.shape[-2]}")
    if fw > X.shape[-1]:
        raise DimensionError(f"conv1d width: filter width {fw} exceeds input width {X.shape[-1]}")
    if b.shape != (c_out,):
        raise DimensionError(f"conv1d bias must have shape ({c_out},), got {b.shape}")

    lead = X.shape[:-3]
    ho, wo = X.shape[-2] - fh + 1, X.shape[-1] - fw + 1
    # patches: [..., c_in, ho, wo, fh, fw] -> [..., ho, wo, c_in*fh*fw]
    patches = sliding_window_view(X, (fh, fw), axis=(-2, -1))
    nl = len(lead)
    perm = tuple(range(nl)) + (nl + 1, nl + 2, nl, nl + 3, nl + 4)
    cols = np.ascontiguousarray(patches.transpose(perm)).reshape(lead + (ho, wo, c_in * fh * fw))
    wmat = W.reshape(c_out, -1)
    out = cols @ wmat.T + b  # [..., ho, wo, c_out]
    out = np.moveaxis(out, -1, -3)

    def backward(g):
        g_last = np.moveaxis(g, -3, -1)  # [..., ho, wo, c_out]
        g2 = g_last.reshape(-1, c_out)
        dW = (g2.T @ cols.reshape(-1, wmat.shape[1])).reshape(W.shape)
        db = g2.sum(axis=0)
        dcols = (g_last @ wmat).reshape(lead + (ho, wo, c_in, fh, fw))
        dX = np.zeros_like(X)
        for i in range(fh):
            for j in range(fw):
                # [..., ho, wo, c_in] -> [..., c_in, ho, wo]
                dX[..., i:i + ho, j:j + wo] += np.moveaxis(dcols[..., i, j], -1, -3)
        return dX, dW, db

    return record_op(out, (x, filters, bias), backward)


def dense(x, W, b) -> Tensor:
    """W·x + b; ``x`` may carry leading batch axes."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if W.ndim != 2 or x.shape[-1] != W.shape[1]:
        raise DimensionError(f"dense: input width {x.shape[-1:]} does not match weights {W.shape}")
    if b.shape != (W.shape[0],):
        raise DimensionError(f"dense: bias shape {b.shape} does not match output width {W.shape[0]}")
    return T.matmul(x, T.transpose(W)) + b


@dataclass
class LSTMWeights:
    """Gate parameters stacked in (input, forget, candidate, output) order."""

    w_x: Tensor  # [4*hid, in]
    w_h: Tensor  # [4*hid, hid]
    b: Tensor  # [4*hid]

    @property
    def hidden(self) -> int:
        return self.w_h.shape[1]


def lstm_step(x, h, c, weights: LSTMWeights) -> tuple[Tensor, Tensor]:
    """One LSTM cell update; returns (h', c')."""
    x, h, c = as_tensor(x), as_tensor(h), as_tensor(c)
    hid = weights.hidden
    if weights.w_x.shape != (4 * hid, x.shape[-1]):
        raise DimensionError(f"lstm_step: input weights {weights.w_x.shape} do not fit input width {x.shape[-1]}")
    if weights.w_h.shape != (4 * hid, hid) or weights.b.shape != (4 * hid,):
        raise DimensionError("lstm_step: recurrent weights or bias inconsistent with hidden size")
    if h.shape[-1] != hid or c.shape[-1] != hid:
        raise DimensionError(f"lstm_step: state width must be {hid}, got h {h.shape} c {c.shape}")
    z = T.matmul(x, T.transpose(weights.w_x)) + T.matmul(h, T.transpose(weights.w_h)) + weights.b
    i = T.logistic(z[..., 0:hid])
    f = T.logistic(z[..., hid:2 * hid])
    g = T.tanh(z[..., 2 * hid:3 * hid])
    o = T.logistic(z[..., 3 * hid:4 * hid])
    c_new = f * c + i * g
    h_new = o * T.tanh(c_new)
    return h_new, c_new


ACTIVATIONS = {
    "relu": T.relu,
    "tanh": T.tanh,
    "logistic": T.logistic,
    "softmax": T.softmax,
}


def activation(x, kind: str) -> Tensor:
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ContractError(f"unknown activation {kind!r}; expected one of {sorted(ACTIVATIONS)}") from None
    return fn(x)


def cross_entropy(logits, labels) -> Tensor:
    """Mean over samples of -log softmax(logits)[label]."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    onehot = np.zeros((n, c))
    onehot[np.arange(n), labels] = 1.0
    return -(T.log_softmax(logits) * onehot).sum() * (1.0 / n)


# ----------------------------------------------------------------------------
# initialisation


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, name: str | None = None) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


def lstm_uniform(rng: np.random.Generator, in_size: int, hidden: int, prefix: str = "lstm") -> LSTMWeights:
    limit = np.sqrt(1.0 / hidden)
    return LSTMWeights(
        w_x=Tensor(rng.uniform(-limit, limit, size=(4 * hidden, in_size)), requires_grad=True, name=f"{prefix}.w_x"),
        w_h=Tensor(rng.uniform(-limit, limit, size=(4 * hidden, hidden)), requires_grad=True, name=f"{prefix}.w_h"),
        b=Tensor(rng.uniform(-limit, limit, size=(4 * hidden,)), requires_grad=True, name=f"{prefix}.b"),
    )
