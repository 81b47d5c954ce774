"""Experiment drivers: classification, stress, noise robustness, denoising."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from senhar.classifiers import (ClassCenters, compute_class_centers, predict_baseline, predict_knn, predict_mlp, predict_sm,
                                train_baseline, train_mlp_head)
from senhar.datasets import (SampleSet, augment_gaussian, inject_label_noise, load_hhar, load_sampleset,
                             load_usc_had, preprocess, split, stratified_subsample, synth_dataset)
from senhar.denoise import DenoiseReport, DistanceStats, center_similarities, denoise_embeddings, \
    fit_distance_stats
from senhar.errors import ConfigurationError, DataError
from senhar.harness.config import ExperimentConfig
from senhar.metrics import MetricsReport, metrics
from senhar.network import SENWeights, embed_batch
from senhar.pairwise import train_sen
from senhar.signal import tensorize_many

log = logging.getLogger(__name__)

TEST_SEED_OFFSET = 1_000_003


@dataclass
class Data:
    train: SampleSet
    test: SampleSet
    n_classes: int
    X_train: np.ndarray
    X_test: np.ndarray


def tensorize_set(samples: SampleSet, cfg: ExperimentConfig) -> np.ndarray:
    expected = int(round(cfg.sample_rate * cfg.window_seconds))
    if len(samples) and samples[0].n != expected:
        raise DataError(f"samples hold {samples[0].n} readings, config expects {expected}")
    if not len(samples):
        return np.zeros((0,) + cfg.sen_config().input_shape)
    return tensorize_many(samples.samples, cfg.intervals, cfg.sample_rate, cfg.freq_layout)


def load_samples(cfg: ExperimentConfig) -> SampleSet:
    """All preprocessed samples of a real dataset (or a cached SampleSet)."""
    if cfg.cache:
        return load_sampleset(cfg.cache)
    if cfg.dataset == "hhar":
        recordings = load_hhar(cfg.data_path)
    elif cfg.dataset == "usc_had":
        recordings = load_usc_had(cfg.data_path)
    else:
        raise ConfigurationError("load_samples handles recorded datasets only")
    return preprocess(recordings, cfg.sample_rate, cfg.window_seconds, cfg.gap_seconds,
                      provenance={"dataset": cfg.dataset, "path": cfg.data_path})


def prepare_data(cfg: ExperimentConfig) -> Data:
    if cfg.dataset == "synth" and not cfg.cache:
        train = synth_dataset(cfg.classes, cfg.train_per_class, cfg.seed, cfg.synth_noise,
                              cfg.sample_rate, cfg.window_seconds)
        test = synth_dataset(cfg.classes, cfg.test_per_class, cfg.seed + TEST_SEED_OFFSET, cfg.synth_noise,
                             cfg.sample_rate, cfg.window_seconds)
        n_classes = cfg.classes
    else:
        samples = load_samples(cfg)
        if cfg.split == "louo":
            train, test = split(samples, "louo", user=cfg.louo_user)
        else:
            train, test = split(samples, "fraction", cfg.train_frac, cfg.seed)
        n_classes = int(samples.labels.max()) + 1
    if cfg.augment_copies > 0:
        # augmentation only on the training side, after the split
        train = augment_gaussian(train, cfg.augment_copies, cfg.augment_std, cfg.seed)
    return Data(train, test, n_classes, tensorize_set(train, cfg), tensorize_set(test, cfg))


@dataclass
class ClassificationResult:
    reports: dict[str, MetricsReport] = field(default_factory=dict)
    predictions: dict[str, np.ndarray] = field(default_factory=dict)
    sen: SENWeights | None = None
    loss_history: list[float] = field(default_factory=list)


def evaluate_sen(sen: SENWeights, X_train, y_train, X_test, y_test, n_classes: int, cfg: ExperimentConfig,
                 which=("sm", "knn", "mlp")) -> ClassificationResult:
    result = ClassificationResult(sen=sen)
    E_train = embed_batch(X_train, sen)
    E_test = embed_batch(X_test, sen)
    if "sm" in which:
        centers = compute_class_centers(E_train, y_train, n_classes)
        result.predictions["sm"] = predict_sm(E_test, centers)
    if "knn" in which:
        result.predictions["knn"] = predict_knn(E_test, E_train, y_train, min(cfg.k_nn, len(E_train)))
    if "mlp" in which:
        head, _ = train_mlp_head(E_train, y_train, n_classes, cfg.head_config())
        result.predictions["mlp"] = predict_mlp(E_test, head)
    for name, pred in result.predictions.items():
        result.reports[name] = metrics(pred, y_test, n_classes)
    return result


def run_classification(cfg: ExperimentConfig, data: Data | None = None,
                       train_labels: np.ndarray | None = None) -> ClassificationResult:
    """Train the SEN (pairwise) and the selected heads on one split and score them."""
    data = data or prepare_data(cfg)
    y_train = data.train.labels if train_labels is None else train_labels
    y_test = data.test.labels
    which = cfg.classifier_list
    result = ClassificationResult()
    sen_heads = [c for c in which if c != "baseline"]
    if sen_heads:
        sen, history = train_sen(data.X_train, y_train, cfg.sen_config(), cfg.train_config())
        result = evaluate_sen(sen, data.X_train, y_train, data.X_test, y_test, data.n_classes, cfg, sen_heads)
        result.loss_history = history
    if "baseline" in which:
        model, _ = train_baseline(data.X_train, y_train, data.n_classes, cfg.sen_config(), cfg.head_config())
        pred = predict_baseline(data.X_test, model)
        result.predictions["baseline"] = pred
        result.reports["baseline"] = metrics(pred, y_test, data.n_classes)
    return result


def _weighted_precision(report: MetricsReport) -> float:
    n = report.support.astype(np.float64)
    return float((report.precision * n).sum() / n.sum())


def run_stress(cfg: ExperimentConfig, data: Data | None = None) -> list[dict]:
    """SEN-SM trained on ``m`` samples per class, for each m, on one fixed test split."""
    data = data or prepare_data(cfg)
    rows = []
    for m in cfg.stress_size_list:
        sub = stratified_subsample(data.train, m, cfg.seed)
        X = tensorize_set(sub, cfg)
        sen, _ = train_sen(X, sub.labels, cfg.sen_config(), cfg.train_config())
        res = evaluate_sen(sen, X, sub.labels, data.X_test, data.test.labels, data.n_classes, cfg, ("sm",))
        rep = res.reports["sm"]
        rows.append({"per_class": m, "avg_f1": rep.avg_f1, "accuracy": rep.accuracy,
                     "precision": _weighted_precision(rep)})
        log.info("stress m=%d accuracy=%.4f", m, rep.accuracy)
    return rows


def run_noise_robustness(cfg: ExperimentConfig, data: Data | None = None) -> list[dict]:
    """SEN-SM vs Baseline trained on noisy labels, scored on the clean test split."""
    data = data or prepare_data(cfg)
    rows = []
    for rate in cfg.noise_rate_list:
        if not 0 <= rate < 1:
            raise ConfigurationError(f"noise rate {rate} outside [0, 1)")
        noisy = inject_label_noise(data.train, rate, cfg.seed, data.n_classes)
        sub = ExperimentConfig(**{**cfg.to_dict(), "classifiers": "sm,baseline"})
        res = run_classification(sub, data, train_labels=noisy.labels)
        for name in ("sm", "baseline"):
            rep = res.reports[name]
            rows.append({"noise_rate": rate, "classifier": name, "accuracy": rep.accuracy, "avg_f1": rep.avg_f1})
    return rows


@dataclass
class DenoiseResult:
    report: DenoiseReport
    stats: DistanceStats
    clean_size: int
    contaminated_size: int
    between_sims: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    # kept for invariant checks and plots
    centers: ClassCenters | None = None
    clean_embeddings: np.ndarray | None = None
    clean_labels: np.ndarray | None = None
    noisy_embeddings: np.ndarray | None = None
    noisy_labels: np.ndarray | None = None


def run_denoise(cfg: ExperimentConfig, data: Data | None = None) -> DenoiseResult:
    """Train on a small clean subset, fit statistics on it, filter the rest.

    Everything outside the clean subset (train remainder plus test split) is
    contaminated with ``cfg.contamination`` label noise and denoised.
    """
    data = data or prepare_data(cfg)
    clean = stratified_subsample(data.train, cfg.clean_per_class, cfg.seed)
    picked = set(int(i) for i in _subset_indices(data.train, clean))
    rest_idx = [i for i in range(len(data.train)) if i not in picked]
    pool = SampleSet([data.train[i] for i in rest_idx] + list(data.test.samples), dict(data.train.provenance))
    noisy = inject_label_noise(pool, cfg.contamination, cfg.seed, data.n_classes)

    X_clean = tensorize_set(clean, cfg)
    sen, _ = train_sen(X_clean, clean.labels, cfg.sen_config(), cfg.train_config())
    E_clean = embed_batch(X_clean, sen)
    centers = compute_class_centers(E_clean, clean.labels, data.n_classes)
    stats = fit_distance_stats(E_clean, clean.labels, centers)

    X_noisy = tensorize_set(noisy, cfg)
    E_noisy = embed_batch(X_noisy, sen) if len(noisy) else np.zeros((0, cfg.lstm_hidden))
    report = denoise_embeddings(E_noisy, noisy.labels, centers, stats, noisy.original_labels)

    sims = center_similarities(E_clean, centers)
    between = {(c, o): sims[clean.labels == c, o] for c in range(data.n_classes)
               for o in range(data.n_classes) if o != c}
    return DenoiseResult(report, stats, len(clean), len(noisy), between, centers, E_clean, clean.labels,
                         E_noisy, noisy.labels)


def _subset_indices(full: SampleSet, sub: SampleSet) -> list[int]:
    ids = {id(s): i for i, s in enumerate(full.samples)}
    return [ids[id(s)] for s in sub.samples]
