import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from senhar.classifiers import (ClassCenters, HeadConfig, MLPHead, center_similarities, compute_class_centers,
                                head_loss, init_mlp_head, mean_cross_entropy, predict_baseline, predict_knn,
                                predict_mlp, predict_sm, train_baseline, train_mlp_head)
from senhar.core.tensor import Tensor
from senhar.datasets import synth_dataset
from senhar.errors import ContractError, CoverageError, DegenerateEmbeddingError
from senhar.network import SENConfig
from senhar.signal import tensorize_many


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def blobs(n_per=10, c=3, dim=5, spread=0.1, seed=0):
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(c, dim)) * 3
    E = np.concatenate([means[k] + spread * rng.normal(size=(n_per, dim)) for k in range(c)])
    return E, np.repeat(np.arange(c), n_per)


class TestCenters:
    def test_singleton(self):
        E = np.array([[3.0, 4.0], [0.0, -2.0]])
        centers = compute_class_centers(E, [0, 1])
        assert np.allclose(centers.centers, [[0.6, 0.8], [0.0, -1.0]])

    def test_duplicates(self):
        centers = compute_class_centers(np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 1.0]]), [0, 0, 1])
        assert np.allclose(centers.centers[0], unit([1.0, 1.0]))

    def test_mean_of_unit_rows_not_renormalised(self):
        centers = compute_class_centers(np.array([[1.0, 0.0], [0.0, 5.0]]), [0, 0])
        assert np.allclose(centers.centers[0], [0.5, 0.5])

    def test_antipodal(self):
        with pytest.raises(DegenerateEmbeddingError):
            compute_class_centers(np.array([[1.0, 0.0], [-1.0, 0.0]]), [0, 0])

    def test_missing_class(self):
        with pytest.raises(CoverageError, match="class 1"):
            compute_class_centers(np.ones((3, 2)), [0, 0, 2], n_classes=3)

    def test_zero_embedding(self):
        with pytest.raises(DegenerateEmbeddingError):
            compute_class_centers(np.array([[0.0, 0.0], [1.0, 0.0]]), [0, 1])


class TestPredictSM:
    def test_self_match(self):
        centers = compute_class_centers(*blobs())
        for k in range(3):
            assert predict_sm(centers.centers[k], centers) == k

    def test_tie_goes_to_lowest(self):
        centers = ClassCenters(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
                               [0, 1, 2, 3])
        assert predict_sm(np.array([1.0, 1.0, 0.0]), centers) == 1

    @pytest.mark.parametrize("seed", range(10))
    def test_brute_force_scan(self, seed):
        rng = np.random.default_rng(seed)
        centers = ClassCenters(rng.normal(size=(3, 4)), [0, 1, 2])
        e = rng.normal(size=4)
        scores = [np.dot(e, c) / np.linalg.norm(e) / np.linalg.norm(c) for c in centers.centers]
        assert predict_sm(e, centers) == int(np.argmax(scores))

    @given(st.integers(0, 10_000), st.floats(1e-4, 1e4))
    @settings(max_examples=60, deadline=None)
    def test_query_scale_invariant(self, seed, alpha):
        rng = np.random.default_rng(seed)
        centers = ClassCenters(rng.normal(size=(4, 6)), [0, 1, 2, 3])
        e = rng.normal(size=6)
        assert predict_sm(alpha * e, centers) == predict_sm(e, centers)

    def test_batch_returns_array(self):
        E, y = blobs()
        pred = predict_sm(E, compute_class_centers(E, y))
        assert isinstance(pred, np.ndarray) and np.array_equal(pred, y)

    def test_degenerate_query(self):
        centers = compute_class_centers(*blobs())
        with pytest.raises(DegenerateEmbeddingError):
            predict_sm(np.zeros(5), centers)

    def test_depends_only_on_centers(self):
        E, y = blobs(seed=3)
        E2 = E.copy()
        # swapping two members of class 0 leaves the center unchanged
        E2[[0, 1]] = E2[[1, 0]]
        E2[2] *= 7.0  # rescaling a member does not move the unit mean either
        queries = np.random.default_rng(1).normal(size=(20, 5))
        assert np.array_equal(predict_sm(queries, compute_class_centers(E, y)),
                              predict_sm(queries, compute_class_centers(E2, y)))


class TestPredictKNN:
    def test_exact_match(self):
        E, y = blobs()
        assert predict_knn(E[13], E, y, 1) == y[13]

    def test_unanimous(self):
        E = np.random.default_rng(0).normal(size=(6, 3))
        assert predict_knn(np.ones(3), E, np.full(6, 2), 6) == 2

    @pytest.mark.parametrize("seed", range(5))
    def test_sort_oracle(self, seed):
        rng = np.random.default_rng(seed)
        E = rng.normal(size=(10, 4))
        y = rng.integers(0, 3, size=10)
        e = rng.normal(size=4)
        sims = [np.dot(e, r) / np.linalg.norm(e) / np.linalg.norm(r) for r in E]
        top = sorted(range(10), key=lambda i: -sims[i])[:3]
        votes = np.bincount(y[top], minlength=3)
        assert predict_knn(e, E, y, 3) == int(np.argmax(votes))

    def test_empty(self):
        with pytest.raises(ContractError):
            predict_knn(np.ones(2), np.zeros((0, 2)), np.zeros(0, dtype=int), 1)

    def test_k_too_large(self):
        with pytest.raises(ContractError):
            predict_knn(np.ones(2), np.ones((2, 2)), [0, 1], 3)

    def test_equals_sm_with_one_sample_per_class(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            c = rng.integers(2, 7)
            E = rng.normal(size=(c, 4))
            queries = rng.normal(size=(8, 4))
            centers = compute_class_centers(E, np.arange(c))
            assert np.array_equal(predict_sm(queries, centers), predict_knn(queries, E, np.arange(c), 1))


class TestMLPHead:
    def test_zero_head_ties_to_class_zero(self):
        z = lambda *s: Tensor(np.zeros(s))  # noqa: E731
        head = MLPHead(z(4, 3), z(4), z(5, 4), z(5))
        assert predict_mlp(np.array([1.0, -2.0, 0.5]), head) == 0

    def test_constructed_bias(self):
        z = lambda *s: Tensor(np.zeros(s))  # noqa: E731
        head = MLPHead(z(4, 3), z(4), z(3, 4), Tensor([0.0, 0.0, 1.0]))
        assert predict_mlp(np.ones(3), head) == 2

    def test_manual_forward(self):
        rng = np.random.default_rng(0)
        head = init_mlp_head(5, 4, hidden=7, seed=3)
        head.b_hidden.data[:] = rng.normal(size=7)
        head.b_out.data[:] = rng.normal(size=4)
        e = rng.normal(size=5)
        h = np.maximum(head.w_hidden.data @ e + head.b_hidden.data, 0)
        logits = head.b_out.data + head.w_out.data @ h
        assert np.allclose(head.logits(Tensor(e[None])).data[0], logits, rtol=1e-14)
        assert predict_mlp(e, head) == int(np.argmax(logits))

    def test_zero_epochs_is_init(self):
        E, y = blobs()
        head, hist = train_mlp_head(E, y, 3, HeadConfig(epochs=0, seed=1))
        ref = init_mlp_head(5, 3, 64, seed=1)
        assert hist == []
        assert all(np.array_equal(head.params[n].data, ref.params[n].data) for n in ref.params)

    def test_training_lowers_loss_and_beats_majority(self):
        E, y = blobs(c=4, seed=2)
        init = init_mlp_head(5, 4, 16, seed=0)
        before = head_loss(init, E, y)
        head, _ = train_mlp_head(E, y, 4, HeadConfig(hidden=16, epochs=60, learning_rate=1e-2, seed=0))
        assert head_loss(head, E, y) < before
        majority = np.bincount(y).max() / len(y)
        assert np.mean(predict_mlp(E, head) == y) >= majority

    def test_cross_entropy_limits(self):
        y = np.array([0, 2, 1])
        assert mean_cross_entropy(np.eye(3)[y], y) == 0.0
        assert mean_cross_entropy(np.full((3, 3), 1 / 3), y) == pytest.approx(np.log(3), abs=1e-12)


@pytest.fixture(scope="module")
def synth_small():
    s = synth_dataset(3, 8, seed=4)
    return tensorize_many(s.samples), s.labels


class TestBaseline:
    CFG = SENConfig(channels=4, lstm_hidden=8, seed=0)

    def test_reproducible(self, synth_small):
        X, y = synth_small
        cfg = HeadConfig(hidden=8, epochs=2, seed=0)
        a, _ = train_baseline(X, y, 3, self.CFG, cfg)
        b, _ = train_baseline(X, y, 3, self.CFG, cfg)
        assert all(np.array_equal(a.params[n].data, b.params[n].data) for n in a.params)

    def test_learns_separable_data(self, synth_small):
        X, y = synth_small
        model, hist = train_baseline(X, y, 3, self.CFG, HeadConfig(hidden=16, epochs=40, learning_rate=5e-3,
                                                                     batch_size=8))
        assert hist[-1] < hist[0]
        assert np.mean(predict_baseline(X, model) == y) > 0.9

    def test_center_similarities_shape(self):
        E, y = blobs()
        S = center_similarities(E, compute_class_centers(E, y))
        assert S.shape == (30, 3) and np.all(np.abs(S) <= 1 + 1e-12)
