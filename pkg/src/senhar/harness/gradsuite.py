"""Finite-difference checks over every differentiable op and the full SEN loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from senhar.core import tensor as T
from senhar.core.functional import LSTMWeights, conv1d, cross_entropy, dense, lstm_step
from senhar.core.gradcheck import grad_check
from senhar.core.tensor import Tensor
from senhar.network import SENConfig, forward, init_network
from senhar.pairwise import cosine_similarity, pairwise_loss

SMOOTH_TOL = 1e-6
COMPOSITE_TOL = 1e-4

TINY_SEN = SENConfig(conv1=2, conv2=2, conv3=2, conv4=1, channels=4, lstm_hidden=8, k=2, f=5, seed=3)


@dataclass
class Check:
    name: str
    fn: Callable[..., Tensor]
    inputs: list[Tensor]
    tol: float
    error: float = float("nan")

    @property
    def passed(self) -> bool:
        return self.error <= self.tol


def _sen_pair_loss(rng: np.random.Generator):
    w = init_network(TINY_SEN)
    X = np.abs(rng.normal(size=(4,) + TINY_SEN.input_shape))
    i, j, s = np.array([0, 1, 2]), np.array([1, 2, 3]), np.array([1, 0, 1])
    names = list(w.params)

    def fn(*params):
        w.params = dict(zip(names, params))
        E = forward(w, X)
        return pairwise_loss(cosine_similarity(E[i], E[j]), s, 10.0)

    return fn, list(w.params.values())


def build_checks(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)

    def r(*shape, positive=False):
        v = rng.normal(size=shape)
        return Tensor(np.abs(v) + 0.5 if positive else v)

    lw_shapes = dict(w_x=(12, 4), w_h=(12, 3), b=(12,))
    checks = [
        Check("add", lambda a, b: (a + b).sum(), [r(3, 4), r(4)], SMOOTH_TOL),
        Check("sub", lambda a, b: (a - b).sum(), [r(3, 4), r(3, 1)], SMOOTH_TOL),
        Check("mul", lambda a, b: (a * b).sum(), [r(3, 4), r(4)], SMOOTH_TOL),
        Check("div", lambda a, b: (a / b).sum(), [r(3, 4), r(4, positive=True)], SMOOTH_TOL),
        Check("exp", lambda a: T.exp(a).sum(), [r(5)], SMOOTH_TOL),
        Check("log", lambda a: T.log(a).sum(), [r(5, positive=True)], SMOOTH_TOL),
        Check("sqrt", lambda a: T.sqrt(a).sum(), [r(5, positive=True)], SMOOTH_TOL),
        Check("tanh", lambda a: T.tanh(a).sum(), [r(5)], SMOOTH_TOL),
        Check("logistic", lambda a: T.logistic(a, 3.0).sum(), [r(5)], SMOOTH_TOL),
        Check("softplus", lambda a: T.softplus(a * 10.0).sum(), [r(5)], SMOOTH_TOL),
        Check("relu", lambda a: (T.relu(a) * T.relu(a)).sum(), [r(6)], COMPOSITE_TOL),
        Check("softmax", lambda a: (T.softmax(a) * Tensor(np.arange(4.0))).sum(), [r(2, 4)], SMOOTH_TOL),
        Check("log_softmax", lambda a: (T.log_softmax(a) * Tensor(np.arange(4.0))).sum(), [r(2, 4)], SMOOTH_TOL),
        Check("sum_mean", lambda a: (a.sum(axis=0) * a.mean(axis=1).sum()).sum(), [r(3, 4)], SMOOTH_TOL),
        Check("matmul", lambda a, b: T.tanh(a @ b).sum(), [r(2, 3, 4), r(4, 5)], SMOOTH_TOL),
        Check("matmul_vec", lambda a, b: T.tanh(a @ b).sum(), [r(4), r(4, 2)], SMOOTH_TOL),
        Check("reshape_transpose", lambda a: (T.transpose(a.reshape(4, 3), (1, 0)) * Tensor(np.arange(12.0).reshape(3, 4))).sum(),
              [r(2, 6)], SMOOTH_TOL),
        Check("getitem", lambda a: (a[np.array([0, 2, 0])] * a[1:3].sum()).sum(), [r(3, 2)], SMOOTH_TOL),
        Check("concat_stack", lambda a, b: (T.concat([a, b], 0) * T.stack([a[0], b[0], a[1]], 0)).sum(),
              [r(2, 3), r(1, 3)], SMOOTH_TOL),
        Check("conv1d", lambda x, w, b: T.tanh(conv1d(x, w, b)).sum(), [r(2, 2, 3, 6), r(3, 2, 2, 3), r(3)],
              SMOOTH_TOL),
        Check("dense", lambda x, w, b: T.tanh(dense(x, w, b)).sum(), [r(3, 4), r(2, 4), r(2)], SMOOTH_TOL),
        Check("lstm_step",
              lambda x, h, c, wx, wh, b: (lambda hc: (hc[0] * 2.0 + hc[1]).sum())(
                  lstm_step(x, h, c, LSTMWeights(wx, wh, b))),
              [r(2, 4), r(2, 3), r(2, 3)] + [r(*s) for s in lw_shapes.values()], SMOOTH_TOL),
        Check("cosine_similarity", lambda a, b: cosine_similarity(a, b).sum(), [r(3, 5), r(3, 5)], SMOOTH_TOL),
        Check("pairwise_loss", lambda phi: pairwise_loss(T.tanh(phi), np.array([1, 0, 1, 0]), 10.0),
              [r(4)], SMOOTH_TOL),
        Check("cross_entropy", lambda z: cross_entropy(z, np.array([0, 2, 1])), [r(3, 4)], SMOOTH_TOL),
    ]
    fn, params = _sen_pair_loss(rng)
    checks.append(Check("sen_pairwise_loss", fn, params, COMPOSITE_TOL))
    return checks


def run_gradcheck_suite(seed: int = 0, eps: float = 1e-5) -> list[Check]:
    checks = build_checks(seed)
    for check in checks:
        check.error = grad_check(check.fn, check.inputs, eps=eps)
    return checks
