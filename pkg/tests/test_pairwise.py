import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from senhar.core import tensor as T
from senhar.core.gradcheck import grad_check
from senhar.core.tensor import Tensor
from senhar.datasets import synth_dataset
from senhar.errors import DegenerateEmbeddingError, NumericError, SamplingError
from senhar.network import SENConfig, embed_batch, init_network
from senhar.pairwise import (TrainConfig, cosine_similarity, pair_probability, pairwise_loss, sample_pairs,
                             similarity_gap, train_sen, write_loss_history)
from senhar.signal import tensorize_many

GRID = [-1.0, -0.5, 0.0, 0.5, 1.0]
TINY = SENConfig(channels=4, lstm_hidden=8, seed=0)

vectors = arrays(np.float64, 5, elements=st.floats(-10, 10)).filter(lambda v: np.linalg.norm(v) > 1e-3)


def closed_form_p(phi, s, k):
    sig = 1.0 / (1.0 + math.exp(-k * phi))
    return sig if s == 1 else 1.0 - sig


class TestCosine:
    def test_identity(self):
        assert cosine_similarity(np.array([0.3, -2.0]), np.array([0.3, -2.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_diagonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(0.7071068, abs=1e-7)

    def test_zero_norm(self):
        with pytest.raises(DegenerateEmbeddingError):
            cosine_similarity(np.zeros(3), np.ones(3))
        with pytest.raises(DegenerateEmbeddingError):
            cosine_similarity(Tensor(np.zeros(3)), Tensor(np.ones(3)))

    @given(vectors, vectors, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, a, b, alpha, beta):
        assert cosine_similarity(alpha * a, beta * b) == pytest.approx(cosine_similarity(a, b), abs=1e-12)

    @given(vectors, vectors)
    @settings(max_examples=100, deadline=None)
    def test_bounded(self, a, b):
        assert -1.0 <= cosine_similarity(a, b) <= 1.0

    def test_tensor_path_matches_numpy(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
        assert np.allclose(cosine_similarity(Tensor(a), Tensor(b)).data, cosine_similarity(a, b), rtol=1e-14)


class TestPairProbability:
    def test_midpoint(self):
        assert pair_probability(0.0, 1, 10) == 0.5

    def test_positive_one(self):
        assert pair_probability(1.0, 1, 10) == pytest.approx(0.9999546, abs=1e-7)

    def test_negative_half(self):
        assert pair_probability(0.5, 0, 10) == pytest.approx(0.0066929, abs=1e-7)

    @pytest.mark.parametrize("phi", GRID)
    def test_sums_to_one(self, phi):
        assert pair_probability(phi, 1, 10) + pair_probability(phi, 0, 10) == 1.0

    @pytest.mark.parametrize("phi", GRID)
    @pytest.mark.parametrize("s", [0, 1])
    def test_closed_form(self, phi, s):
        assert pair_probability(phi, s, 10) == pytest.approx(closed_form_p(phi, s, 10), abs=1e-12)


class TestPairwiseLoss:
    def test_positive_aligned(self):
        assert pairwise_loss([1.0], [1], 10) == pytest.approx(math.log1p(math.exp(-10)), rel=1e-12)
        assert pairwise_loss([1.0], [1], 10) == pytest.approx(4.54e-5, rel=1e-3)

    def test_negative_opposed(self):
        assert pairwise_loss([-1.0], [0], 10) == pytest.approx(math.log1p(math.exp(-10)), rel=1e-12)

    def test_midpoint(self):
        assert pairwise_loss([0.0], [1], 10) == pytest.approx(math.log(2), rel=1e-12)

    @pytest.mark.parametrize("phi", GRID)
    @pytest.mark.parametrize("s", [0, 1])
    def test_is_negative_log_likelihood(self, phi, s):
        assert pairwise_loss([phi], [s], 10) == pytest.approx(-math.log(closed_form_p(phi, s, 10)), abs=1e-10)

    def test_monotone_in_phi(self):
        pos = [pairwise_loss([p], [1], 10) for p in GRID]
        neg = [pairwise_loss([p], [0], 10) for p in GRID]
        assert all(a > b for a, b in zip(pos, pos[1:]))
        assert all(a < b for a, b in zip(neg, neg[1:]))

    def test_sums_over_pairs(self):
        phis, ss = [0.2, -0.7, 0.9], [1, 0, 0]
        assert pairwise_loss(phis, ss, 10) == pytest.approx(sum(pairwise_loss([p], [s], 10) for p, s in zip(phis, ss)))

    def test_extreme_stable(self):
        assert math.isfinite(pairwise_loss([1.0, -1.0], [0, 1], 1e4))

    def test_tensor_matches_float(self):
        phis = np.array([0.3, -0.2, 0.8])
        ss = np.array([1, 0, 1])
        assert pairwise_loss(Tensor(phis), ss, 10).item() == pytest.approx(pairwise_loss(phis, ss, 10), rel=1e-14)

    def test_gradient_wrt_phi(self):
        phis = Tensor(np.array([-0.9, -0.3, 0.1, 0.6]), requires_grad=True)
        err = grad_check(lambda p: pairwise_loss(p, np.array([1, 0, 1, 0]), 10.0), [phis])
        assert err <= 1e-6


class TestSamplePairs:
    def test_composition(self):
        batch = sample_pairs(np.array([0, 0, 1, 1, 2]), 4, 0.5, np.random.default_rng(0))
        assert batch.s.sum() == 2 and len(batch) == 4

    def test_labels_consistent(self):
        labels = np.repeat(np.arange(4), 5)
        b = sample_pairs(labels, 64, 0.25, np.random.default_rng(1))
        assert np.array_equal(b.s, (labels[b.i] == labels[b.j]).astype(int))
        assert b.s.sum() == 16
        assert np.all(b.i != b.j)

    def test_single_class(self):
        with pytest.raises(SamplingError):
            sample_pairs(np.zeros(5, dtype=int), 4, 0.5, np.random.default_rng(0))

    def test_no_positive_possible(self):
        with pytest.raises(SamplingError):
            sample_pairs(np.arange(5), 4, 0.5, np.random.default_rng(0))

    def test_deterministic(self):
        labels = np.repeat(np.arange(3), 4)
        a = sample_pairs(labels, 16, 0.5, np.random.default_rng(9))
        b = sample_pairs(labels, 16, 0.5, np.random.default_rng(9))
        assert np.array_equal(a.i, b.i) and np.array_equal(a.j, b.j)

    def test_positives_uniform_over_pairs(self):
        # class 0 has 3 members (6 ordered pairs), class 1 has 2 (2 pairs)
        labels = np.array([0, 0, 0, 1, 1, 2])
        b = sample_pairs(labels, 8000, 1.0, np.random.default_rng(2))
        share0 = np.mean(labels[b.i] == 0)
        assert share0 == pytest.approx(6 / 8, abs=0.02)


@pytest.fixture(scope="module")
def small_synth():
    s = synth_dataset(3, 6, seed=1)
    return tensorize_many(s.samples), s.labels


class TestTrainSen:
    def test_loss_decreases(self, small_synth):
        X, y = small_synth
        _, hist = train_sen(X, y, TINY, TrainConfig(epochs=40, batch_pairs=32, learning_rate=3e-3))
        assert np.mean(hist[-5:]) < np.mean(hist[:5])

    def test_zero_learning_rate(self, small_synth):
        X, y = small_synth
        w0 = init_network(TINY)
        w, _ = train_sen(X, y, TINY, TrainConfig(epochs=1, batch_pairs=8, learning_rate=0.0, optimizer="sgd"))
        assert all(np.array_equal(w.params[n].data, w0.params[n].data) for n in w0.params)

    def test_deterministic(self, small_synth):
        X, y = small_synth
        cfg = TrainConfig(epochs=2, batch_pairs=16)
        _, h1 = train_sen(X, y, TINY, cfg)
        _, h2 = train_sen(X, y, TINY, cfg)
        assert h1 == h2

    def test_steps(self, small_synth):
        X, y = small_synth
        _, hist = train_sen(X, y, TINY, TrainConfig(epochs=3, batch_pairs=8))
        assert len(hist) == TrainConfig(epochs=3, batch_pairs=8).steps_for(len(X)) == 3 * 3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite_aborts_with_step(self, small_synth, bad):
        X, y = small_synth
        X = X.copy()
        X[:, 0, 0, 0, 0] = bad
        with pytest.raises(NumericError, match="step 0"):
            train_sen(X, y, TINY, TrainConfig(epochs=1, batch_pairs=64))

    def test_separates_classes(self, small_synth):
        X, y = small_synth
        w, _ = train_sen(X, y, TINY, TrainConfig(epochs=60, batch_pairs=32, learning_rate=3e-3))
        assert similarity_gap(embed_batch(X, w), y) > 0.3


class TestHelpers:
    def test_similarity_gap(self):
        E = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        assert similarity_gap(E, [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_loss_csv(self, tmp_path):
        write_loss_history(tmp_path / "l.csv", [0.5, 0.25])
        assert (tmp_path / "l.csv").read_text().splitlines() == ["step,J", "0,0.5", "1,0.25"]

    def test_sigmoid_matches_tensor_logistic(self):
        z = np.linspace(-1, 1, 5)
        assert np.allclose(T.logistic(Tensor(z), 10.0).data, pair_probability(z, 1, 10.0), rtol=1e-14)
