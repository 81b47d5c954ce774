import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from senhar.classifiers import ClassCenters, center_similarities, compute_class_centers
from senhar.denoise import (DistanceStats, between_class_stats, clean_mask, denoise_dataset, denoise_embeddings,
                            fit_distance_stats, in_class_threshold, is_clean, qq_data, write_qq_csv)
from senhar.errors import StatisticsError
from senhar.network import SENConfig, embed_batch, init_network


def clustered(c=3, n_per=40, dim=6, spread=0.15, seed=0):
    rng = np.random.default_rng(seed)
    means = np.eye(dim)[:c] * 3
    E = np.concatenate([means[k] + spread * rng.normal(size=(n_per, dim)) for k in range(c)])
    return E, np.repeat(np.arange(c), n_per)


def fitted(seed=0, **kw):
    E, y = clustered(seed=seed, **kw)
    centers = compute_class_centers(E, y)
    return E, y, centers, fit_distance_stats(E, y, centers)


def manual_stats_2d():
    """Two classes on the axes with mu=0, sigma=0.1 between them."""
    centers = ClassCenters(np.array([[1.0, 0.0], [0.0, 1.0]]), [0, 1])
    nan = np.nan
    return centers, DistanceStats(np.array([0.9, 0.9]), np.array([[nan, 0.0], [0.0, nan]]),
                                  np.array([[nan, 0.1], [0.1, nan]]))


class TestThresholds:
    def test_constant_in_class(self):
        assert in_class_threshold([1.0] * 7) == 1.0

    def test_two_point_interpolation(self):
        assert in_class_threshold([0.8, 1.0]) == pytest.approx(0.81, abs=1e-15)

    def test_between_mu_sigma(self):
        mu, sigma = between_class_stats([-0.1, 0.0, 0.1])
        assert mu == pytest.approx(0.0, abs=1e-17)
        assert sigma == pytest.approx(0.1, abs=1e-15)


class TestFitDistanceStats:
    def test_identical_samples_give_unit_threshold(self):
        E = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 2.0], [0.0, 3.0]])
        y = np.array([0, 0, 1, 1])
        stats = fit_distance_stats(E, y, compute_class_centers(E, y))
        assert np.allclose(stats.in_p5, 1.0)

    def test_constructed_between_statistics(self):
        r = np.sqrt(0.99)
        E = np.array([[r, -0.1, 0.0], [1.0, 0.0, 0.0], [r, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
        y = np.array([0, 0, 0, 1, 1])
        stats = fit_distance_stats(E, y, compute_class_centers(E, y))
        assert stats.mu[0, 1] == pytest.approx(0.0, abs=1e-15)
        assert stats.sigma[0, 1] == pytest.approx(0.1, abs=1e-12)
        assert np.isnan(stats.mu[0, 0]) and np.isnan(stats.sigma[1, 1])

    def test_needs_two_per_class(self):
        E = np.array([[1.0, 0.0], [1.0, 0.1], [0.0, 1.0]])
        with pytest.raises(StatisticsError, match="class 1"):
            fit_distance_stats(E, [0, 0, 1], compute_class_centers(E, [0, 0, 1]))

    def test_rows_dump(self):
        _, _, _, stats = fitted()
        rows = stats.to_rows()
        assert len(rows) == 3 + 3 * 2


class TestIsClean:
    def test_prototype(self):
        centers, stats = manual_stats_2d()
        assert is_clean(np.array([1.0, 0.0]), 0, centers, stats)

    def test_condition_a_violation(self):
        centers, stats = manual_stats_2d()
        # own similarity cos(angle) below 0.9, other similarity still below 0.2
        e = np.array([0.85, -np.sqrt(1 - 0.85 ** 2)])
        assert not is_clean(e, 0, centers, stats)

    def test_condition_b_violation(self):
        centers = ClassCenters(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), [0, 1])
        nan = np.nan
        stats = DistanceStats(np.array([0.5, 0.5]), np.array([[nan, 0.0], [0.0, nan]]),
                              np.array([[nan, 0.1], [0.1, nan]]))
        e = np.array([np.sqrt(0.75), 0.5, 0.0])  # own sim 0.866, between sim 0.5 > 0.2
        assert not is_clean(e, 0, centers, stats)
        e_ok = np.array([np.sqrt(1 - 0.19 ** 2), 0.19, 0.0])
        assert is_clean(e_ok, 0, centers, stats)

    def test_missing_statistics(self):
        centers, stats = manual_stats_2d()
        stats.in_p5[1] = np.nan
        with pytest.raises(StatisticsError):
            is_clean(np.array([0.0, 1.0]), 1, centers, stats)

    def test_claimed_out_of_range(self):
        centers, stats = manual_stats_2d()
        with pytest.raises(StatisticsError):
            is_clean(np.array([0.0, 1.0]), 2, centers, stats)

    def test_agrees_with_brute_force(self):
        E, y, centers, stats = fitted(seed=1)
        rng = np.random.default_rng(2)
        Q = np.concatenate([E, rng.normal(size=(50, 6)) * 2])
        claimed = np.concatenate([y, rng.integers(0, 3, 50)])
        for e, k in zip(Q, claimed):
            sims = [float(np.dot(e, c) / np.linalg.norm(e) / np.linalg.norm(c)) for c in centers.centers]
            ok = sims[k] >= stats.in_p5[k] and all(
                sims[o] < stats.mu[k, o] + 2 * stats.sigma[k, o] for o in range(3) if o != k)
            assert is_clean(e, int(k), centers, stats) == ok

    @given(st.integers(0, 10_000), st.floats(0.0, 5.0))
    @settings(max_examples=80, deadline=None)
    def test_raising_own_similarity_never_flags(self, seed, boost):
        rng = np.random.default_rng(seed)
        centers = ClassCenters(np.eye(4)[:3], [0, 1, 2])
        mu = rng.uniform(0.0, 0.3, size=(3, 3))
        sigma = rng.uniform(0.0, 0.1, size=(3, 3))
        np.fill_diagonal(mu, np.nan)
        np.fill_diagonal(sigma, np.nan)
        stats = DistanceStats(rng.uniform(-0.5, 1.0, size=3), mu, sigma)
        k = int(rng.integers(0, 3))
        e = rng.normal(size=4)
        e[k] = abs(e[k])  # so the boost only lengthens e
        raised = e.copy()
        raised[k] += boost  # own similarity up, every other similarity moves toward 0
        if is_clean(e, k, centers, stats):
            assert center_similarities(raised, centers)[0, k] >= center_similarities(e, centers)[0, k] - 1e-15
            assert is_clean(raised, k, centers, stats)

    @given(st.integers(0, 10_000), st.floats(0.0, 5.0))
    @settings(max_examples=80, deadline=None)
    def test_rule_a_monotone(self, seed, boost):
        rng = np.random.default_rng(seed)
        centers = ClassCenters(np.eye(4)[:3], [0, 1, 2])
        k = int(rng.integers(0, 3))
        e = rng.normal(size=4)
        raised = e.copy()
        raised[k] += boost
        own = lambda v: center_similarities(v, centers)[0, k]  # noqa: E731
        threshold = rng.uniform(-1, 1)
        assert own(raised) >= own(e) - 1e-15
        if own(e) >= threshold:
            assert own(raised) >= threshold - 1e-15


class TestDenoise:
    def test_partition(self):
        E, y, centers, stats = fitted(seed=4)
        noisy = y.copy()
        noisy[::5] = (noisy[::5] + 1) % 3
        rep = denoise_embeddings(E, noisy, centers, stats, y)
        kept, flagged = set(rep.kept_indices.tolist()), set(rep.flagged_indices.tolist())
        assert not kept & flagged
        assert kept | flagged == set(range(len(E)))

    def test_clean_set_violates_rule_a_at_most_five_percent(self):
        for seed in range(5):
            E, y, centers, stats = fitted(seed=seed)
            sims = center_similarities(E, centers)
            for k in range(3):
                own = sims[y == k, k]
                assert (own < stats.in_p5[k]).sum() <= 0.05 * len(own) + 1

    def test_zero_noise_rule_a_flags_only_tail(self):
        E, y, centers, stats = fitted(seed=5)
        rep = denoise_embeddings(E, y, centers, stats, y)
        assert rep.recall is None
        assert rep.to_dict()["recall"] == "n/a"
        sims = center_similarities(E, centers)
        for k in range(3):
            in_class = np.flatnonzero(y == k)
            own = sims[in_class, k]
            failing_a = in_class[own < stats.in_p5[k]]
            tail = in_class[np.argsort(own, kind="stable")[:int(np.ceil(0.05 * len(own)))]]
            assert set(failing_a.tolist()) <= set(tail.tolist())
            assert set(failing_a.tolist()) <= set(rep.flagged_indices.tolist())

    def test_mislabeled_at_true_center_flagged(self):
        E, y, centers, stats = fitted(seed=6)
        e = centers.centers[2]
        rep = denoise_embeddings(e[None], [0], centers, stats, [2])
        assert rep.flagged_indices.tolist() == [0]
        assert rep.recall == 1.0

    def test_recall_on_constructed_noise(self):
        E, y, centers, stats = fitted(seed=7)
        rng = np.random.default_rng(0)
        noisy = y.copy()
        flip = rng.choice(len(y), 48, replace=False)
        noisy[flip] = (noisy[flip] + rng.integers(1, 3, 48)) % 3
        rep = denoise_embeddings(E, noisy, centers, stats, y)
        assert rep.recall == 1.0

    def test_denoise_dataset_embeds(self):
        cfg = SENConfig(channels=3, lstm_hidden=5, seed=0)
        w = init_network(cfg)
        X = np.abs(np.random.default_rng(1).normal(size=(8,) + cfg.input_shape))
        y = np.array([0, 1] * 4)
        E = embed_batch(X, w)
        centers = compute_class_centers(E, y)
        stats = fit_distance_stats(E, y, centers)
        a = denoise_dataset(X, y, w, centers, stats)
        b = denoise_embeddings(E, y, centers, stats)
        assert np.array_equal(a.kept_indices, b.kept_indices)
        assert a.detection is None

    def test_vector_mask_matches_scalar(self):
        E, y, centers, stats = fitted(seed=8)
        mask = clean_mask(E, y, centers, stats)
        assert mask.tolist() == [is_clean(e, int(k), centers, stats) for e, k in zip(E, y)]


class TestQQ:
    def test_three_values(self):
        pts = qq_data([1.0, -1.0, 0.0])
        theo, emp = zip(*pts)
        assert np.allclose(emp, [-1.0, 0.0, 1.0], atol=1e-15)
        assert np.allclose(theo, norm.ppf([1 / 6, 1 / 2, 5 / 6]), atol=1e-15)

    def test_constant(self):
        with pytest.raises(StatisticsError):
            qq_data([0.3, 0.3, 0.3])

    def test_gaussian_approaches_identity(self):
        devs = []
        for n in (100, 10_000):
            x = np.random.default_rng(0).normal(size=n)
            theo, emp = map(np.array, zip(*qq_data(x)))
            central = slice(n // 20, n - n // 20)
            devs.append(np.max(np.abs(theo[central] - emp[central])))
        assert devs[1] < devs[0] < 0.5

    def test_csv(self, tmp_path):
        write_qq_csv(tmp_path / "q.csv", qq_data([0.0, 1.0, 2.0]))
        assert (tmp_path / "q.csv").read_text().splitlines()[0] == "theoretical,empirical"
