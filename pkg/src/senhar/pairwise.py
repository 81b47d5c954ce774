"""Pairwise cosine-similarity likelihood training for the SEN encoder.

Each sampled pair (i, j) carries s_ij = 1 when both samples share a label.
The probability of s_ij is a steep logistic of the embeddings' cosine
similarity, and training minimises the summed negative log likelihood.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from senhar.core import tensor as T
from senhar.core.optim import OptimizerState, optimizer_step
from senhar.core.tensor import Tape, Tensor
from senhar.errors import ConfigurationError, DegenerateEmbeddingError, NumericError, SamplingError
from senhar.network import SENConfig, SENWeights, forward, init_network

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    sigmoid_k: float = 10.0
    batch_pairs: int = 128
    positive_fraction: float = 0.5
    epochs: int = 100
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0

    def steps_for(self, n_samples: int) -> int:
        # one epoch = ceil(N / B) pair batches
        return self.epochs * math.ceil(n_samples / self.batch_pairs)


@dataclass
class PairBatch:
    i: np.ndarray
    j: np.ndarray
    s: np.ndarray

    def __len__(self):
        return len(self.i)

    @property
    def pairs(self) -> list[tuple[int, int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist(), self.s.tolist()))


def cosine_similarity(e_i, e_j):
    """Cosine of the angle between ``e_i`` and ``e_j`` along the last axis.

    Tensor inputs give a differentiable Tensor; arrays give floats/arrays
    clipped to [-1, 1].
    """
    if isinstance(e_i, Tensor) or isinstance(e_j, Tensor):
        a, b = T.as_tensor(e_i), T.as_tensor(e_j)
        na = T.sqrt(T.tsum(a * a, axis=-1))
        nb = T.sqrt(T.tsum(b * b, axis=-1))
        if np.any(na.data == 0) or np.any(nb.data == 0):
            raise DegenerateEmbeddingError("cosine similarity of a zero-norm embedding")
        return T.tsum(a * b, axis=-1) / (na * nb)
    a = np.asarray(e_i, dtype=np.float64)
    b = np.asarray(e_j, dtype=np.float64)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na == 0) or np.any(nb == 0):
        raise DegenerateEmbeddingError("cosine similarity of a zero-norm embedding")
    out = np.clip(np.sum(a * b, axis=-1) / (na * nb), -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def pair_probability(phi, s, k: float = 10.0):
    """p(s | phi) under the logistic with steepness ``k``."""
    if k <= 0:
        raise ConfigurationError("sigmoid steepness must be positive")
    sig = 1.0 / (1.0 + np.exp(-k * np.asarray(phi, dtype=np.float64)))
    out = np.where(np.asarray(s) == 1, sig, 1.0 - sig)
    return float(out) if out.ndim == 0 else out


def pairwise_loss(phis, ss, k: float = 10.0):
    """Negative log likelihood summed over pairs.

    Uses softplus(z) - s*z with z = k*phi, the overflow-safe form of
    -(s*z - log(1 + e^z)).
    """
    if k <= 0:
        raise ConfigurationError("sigmoid steepness must be positive")
    s = np.asarray(ss, dtype=np.float64)
    if isinstance(phis, Tensor):
        if phis.shape != s.shape:
            raise ConfigurationError(f"phis {phis.shape} and labels {s.shape} differ in length")
        z = phis * k
        return T.tsum(T.softplus(z) - z * s)
    z = k * np.asarray(phis, dtype=np.float64)
    if z.shape != s.shape:
        raise ConfigurationError(f"phis {z.shape} and labels {s.shape} differ in length")
    return float(np.sum(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - s * z))


def sample_pairs(labels, B: int, positive_fraction: float, rng: np.random.Generator) -> PairBatch:
    """Draw ``B`` ordered pairs, ``round(B * positive_fraction)`` of them positive.

    Positives are uniform over all same-label ordered pairs (i != j), negatives
    uniform over all different-label ordered pairs.
    """
    labels = np.asarray(labels)
    n_pos = int(round(B * positive_fraction))
    n_neg = B - n_pos
    classes, counts = np.unique(labels, return_counts=True)
    members = {c: np.flatnonzero(labels == c) for c in classes}

    pos_weight = counts * (counts - 1.0)
    if n_pos and pos_weight.sum() == 0:
        raise SamplingError("positive pairs requested but no class has two samples")
    if n_neg and len(classes) < 2:
        raise SamplingError("negative pairs requested but only one class is present")

    i_out = np.empty(B, dtype=np.int64)
    j_out = np.empty(B, dtype=np.int64)
    if n_pos:
        cls = rng.choice(len(classes), size=n_pos, p=pos_weight / pos_weight.sum())
        for t, ci in enumerate(cls):
            a, b = rng.choice(members[classes[ci]], size=2, replace=False)
            i_out[t], j_out[t] = a, b
    if n_neg:
        N = len(labels)
        other = N - counts[np.searchsorted(classes, labels)]
        first = rng.choice(N, size=n_neg, p=other / other.sum())
        for t, a in enumerate(first, start=n_pos):
            pool = np.flatnonzero(labels != labels[a])
            i_out[t], j_out[t] = a, pool[rng.integers(len(pool))]
    s = (labels[i_out] == labels[j_out]).astype(np.int64)
    return PairBatch(i_out, j_out, s)


def pair_loss_on_batch(w: SENWeights, X: np.ndarray, batch: PairBatch, sigmoid_k: float) -> Tensor:
    """Embed each distinct sample once and score every pair of ``batch``."""
    uniq, inv = np.unique(np.concatenate([batch.i, batch.j]), return_inverse=True)
    E = forward(w, X[uniq])
    B = len(batch)
    phi = cosine_similarity(E[inv[:B]], E[inv[B:]])
    return pairwise_loss(phi, batch.s, sigmoid_k)


def train_sen(samples, labels, sen_config: SENConfig, train_config: TrainConfig,
              weights: SENWeights | None = None) -> tuple[SENWeights, list[float]]:
    """Fit the encoder with the pairwise likelihood; returns (weights, per-step loss)."""
    X = np.asarray(samples, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(X) < 2 or len(X) != len(labels):
        raise ConfigurationError("train_sen needs at least two samples with one label each")
    w = weights if weights is not None else init_network(sen_config)
    rng = np.random.default_rng(train_config.seed)
    state = OptimizerState(kind=train_config.optimizer, learning_rate=train_config.learning_rate)
    history: list[float] = []
    steps = train_config.steps_for(len(X))
    for step in range(steps):
        batch = sample_pairs(labels, train_config.batch_pairs, train_config.positive_fraction, rng)
        with Tape() as tape:
            J = pair_loss_on_batch(w, X, batch, train_config.sigmoid_k)
        value = J.item()
        if not math.isfinite(value):
            raise NumericError(f"non-finite pairwise loss at step {step}: {value}")
        tape.backward(J)
        try:
            optimizer_step(w.params, state)
        except NumericError as exc:
            raise NumericError(f"step {step}: {exc}") from exc
        history.append(value)
        if step % 50 == 0:
            log.debug("step %d/%d loss %.5f", step, steps, value)
    return w, history


def similarity_gap(embeddings, labels) -> float:
    """Mean in-class minus mean between-class cosine similarity over all pairs."""
    E = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    U = E / np.linalg.norm(E, axis=1, keepdims=True)
    S = U @ U.T
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(len(E), dtype=bool)
    return float(S[same & off].mean() - S[~same].mean())


def write_loss_history(path, history) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["step", "J"])
        for step, value in enumerate(history):
            out.writerow([step, repr(float(value))])
