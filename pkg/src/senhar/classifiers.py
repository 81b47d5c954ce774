"""Recognition heads over SEN embeddings.

* similarity matching (SEN-SM): nearest class center by cosine similarity
* k-nearest neighbours over training embeddings
* SEN-MLP: one-hidden-layer head trained with cross entropy on frozen embeddings
* Baseline: encoder and head trained jointly with cross entropy only

Every argmax breaks ties toward the lowest class id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from senhar.core import tensor as T
from senhar.core.functional import cross_entropy, dense, glorot_uniform
from senhar.core.optim import OptimizerState, optimizer_step
from senhar.core.tensor import Tape, Tensor
from senhar.errors import (ConfigurationError, ContractError, CoverageError, DegenerateEmbeddingError,
                           NumericError)
from senhar.network import SENConfig, SENWeights, embed_batch, forward, init_network


def _unit_rows(E: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(E, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateEmbeddingError("zero-norm embedding")
    return E / norms


@dataclass
class ClassCenters:
    centers: np.ndarray  # c x l, mean of unit embeddings (not renormalised)
    class_ids: list[int]

    @property
    def unit(self) -> np.ndarray:
        return self.centers / np.linalg.norm(self.centers, axis=1, keepdims=True)


def compute_class_centers(embeddings, labels, n_classes: int | None = None) -> ClassCenters:
    E = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    U = _unit_rows(E)
    centers = np.empty((n_classes, E.shape[1]))
    for c in range(n_classes):
        rows = U[labels == c]
        if len(rows) == 0:
            raise CoverageError(f"class {c} has no training samples")
        centers[c] = rows.mean(axis=0)
        if np.linalg.norm(centers[c]) == 0:
            raise DegenerateEmbeddingError(f"class {c} center has zero norm")
    return ClassCenters(centers, list(range(n_classes)))


def center_similarities(E, centers: ClassCenters) -> np.ndarray:
    """Cosine similarity of each row of ``E`` to every class center."""
    return _unit_rows(np.atleast_2d(np.asarray(E, dtype=np.float64))) @ centers.unit.T


def predict_sm(e, centers: ClassCenters):
    """Class of the most cosine-similar center; one id for a vector, an array for a matrix."""
    e = np.asarray(e, dtype=np.float64)
    pred = np.asarray(centers.class_ids)[np.argmax(center_similarities(e, centers), axis=1)]
    return int(pred[0]) if e.ndim == 1 else pred


def predict_knn(e, train_embeddings, train_labels, k_nn: int = 5):
    """Majority label among the ``k_nn`` most cosine-similar training rows."""
    E = np.asarray(train_embeddings, dtype=np.float64)
    y = np.asarray(train_labels, dtype=np.int64)
    if len(E) == 0:
        raise ContractError("k-NN needs a non-empty training set")
    if not 1 <= k_nn <= len(E):
        raise ContractError(f"k_nn={k_nn} must lie in [1, {len(E)}]")
    e = np.asarray(e, dtype=np.float64)
    sims = _unit_rows(np.atleast_2d(e)) @ _unit_rows(E).T
    n_classes = int(y.max()) + 1
    preds = np.empty(len(sims), dtype=np.int64)
    for r, row in enumerate(sims):
        nearest = np.argsort(-row, kind="stable")[:k_nn]
        preds[r] = np.argmax(np.bincount(y[nearest], minlength=n_classes))
    return int(preds[0]) if e.ndim == 1 else preds


# ----------------------------------------------------------------------------
# MLP head


@dataclass
class HeadConfig:
    hidden: int = 64
    epochs: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 32
    optimizer: str = "adam"
    seed: int = 0


@dataclass
class MLPHead:
    """logits = b0 + W_out · relu(W · e + b)."""

    w_hidden: Tensor
    b_hidden: Tensor
    w_out: Tensor
    b_out: Tensor

    @property
    def params(self) -> dict[str, Tensor]:
        return {"head.w_hidden": self.w_hidden, "head.b_hidden": self.b_hidden,
                "head.w_out": self.w_out, "head.b_out": self.b_out}

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[0]

    def logits(self, E) -> Tensor:
        return dense(T.relu(dense(E, self.w_hidden, self.b_hidden)), self.w_out, self.b_out)

    def copy(self) -> "MLPHead":
        return MLPHead(*(Tensor(t.data.copy(), requires_grad=True) for t in
                         (self.w_hidden, self.b_hidden, self.w_out, self.b_out)))


def init_mlp_head(embedding_dim: int, n_classes: int, hidden: int = 64, seed: int = 0) -> MLPHead:
    rng = np.random.default_rng(seed)
    return MLPHead(
        glorot_uniform(rng, (hidden, embedding_dim), embedding_dim, hidden, name="head.w_hidden"),
        Tensor(np.zeros(hidden), requires_grad=True, name="head.b_hidden"),
        glorot_uniform(rng, (n_classes, hidden), hidden, n_classes, name="head.w_out"),
        Tensor(np.zeros(n_classes), requires_grad=True, name="head.b_out"),
    )


def mean_cross_entropy(probs, labels) -> float:
    """Average of -log p[label] over samples, from explicit probabilities."""
    P = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    return float(-np.mean(np.log(P[np.arange(len(y)), y])))


def _minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _fit_cross_entropy(params: dict[str, Tensor], logits_fn, n: int, labels: np.ndarray,
                       config: HeadConfig) -> list[float]:
    rng = np.random.default_rng(config.seed)
    state = OptimizerState(kind=config.optimizer, learning_rate=config.learning_rate)
    history = []
    for epoch in range(config.epochs):
        total = 0.0
        for idx in _minibatches(n, config.batch_size, rng):
            with Tape() as tape:
                loss = cross_entropy(logits_fn(idx), labels[idx])
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"non-finite cross-entropy loss in epoch {epoch}")
            tape.backward(loss)
            optimizer_step(params, state)
            total += value * len(idx)
        history.append(total / n)
    return history


def train_mlp_head(embeddings, labels, n_classes: int, config: HeadConfig | None = None,
                   head: MLPHead | None = None) -> tuple[MLPHead, list[float]]:
    """Fit a head on frozen embeddings; returns (head, per-epoch mean loss)."""
    config = config or HeadConfig()
    E = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    head = head or init_mlp_head(E.shape[1], n_classes, config.hidden, config.seed)
    history = _fit_cross_entropy(head.params, lambda idx: head.logits(Tensor(E[idx])), len(E), y, config)
    return head, history


def head_loss(head: MLPHead, embeddings, labels) -> float:
    return cross_entropy(head.logits(Tensor(np.asarray(embeddings, dtype=np.float64))), labels).item()


def predict_mlp(e, head: MLPHead):
    e = np.asarray(e, dtype=np.float64)
    logits = head.logits(Tensor(np.atleast_2d(e))).data
    # softmax is monotone, so the argmax of the logits is the argmax of the probabilities
    pred = np.argmax(logits, axis=1)
    return int(pred[0]) if e.ndim == 1 else pred


# ----------------------------------------------------------------------------
# Baseline


@dataclass
class BaselineModel:
    sen: SENWeights
    head: MLPHead

    @property
    def params(self) -> dict[str, Tensor]:
        return {**self.sen.params, **self.head.params}


def train_baseline(samples, labels, n_classes: int, sen_config: SENConfig,
                   config: HeadConfig | None = None) -> tuple[BaselineModel, list[float]]:
    """Train encoder and head jointly against mean cross entropy; no pairwise term."""
    config = config or HeadConfig()
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(X) < 2 or len(X) != len(y):
        raise ConfigurationError("train_baseline needs at least two labelled samples")
    sen = init_network(sen_config)
    head = init_mlp_head(sen_config.embedding_dim, n_classes, config.hidden, config.seed)
    model = BaselineModel(sen, head)
    history = _fit_cross_entropy(model.params, lambda idx: head.logits(forward(sen, X[idx])), len(X), y, config)
    return model, history


def predict_baseline(samples, model: BaselineModel) -> np.ndarray:
    return predict_mlp(embed_batch(samples, model.sen), model.head)
