"""Flag likely mislabeled samples from cosine-similarity statistics.

A sample counts as correctly labeled when its similarity to its own class
center is at least that class's 5th percentile, and its similarity to every
other center stays below mean + 2 std of the clean between-class similarities
for that (claimed class, other class) pair.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from senhar.classifiers import ClassCenters, center_similarities
from senhar.errors import StatisticsError
from senhar.metrics import MetricsReport, metrics
from senhar.network import SENWeights, embed_batch

IN_CLASS_PERCENTILE = 5.0
SIGMA_MULTIPLIER = 2.0


@dataclass
class DistanceStats:
    in_p5: np.ndarray  # c
    mu: np.ndarray  # c x c, row = sample class, column = other center; diagonal NaN
    sigma: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.in_p5)

    def between_threshold(self) -> np.ndarray:
        return self.mu + SIGMA_MULTIPLIER * self.sigma

    def to_rows(self) -> list[dict]:
        rows = []
        for c in range(self.n_classes):
            rows.append({"class": c, "other": "", "in_p5": self.in_p5[c], "mu": "", "sigma": ""})
            for o in range(self.n_classes):
                if o != c:
                    rows.append({"class": c, "other": o, "in_p5": "", "mu": self.mu[c, o], "sigma": self.sigma[c, o]})
        return rows


def in_class_threshold(similarities) -> float:
    """5th percentile of own-center similarities, linear interpolation."""
    return float(np.percentile(np.asarray(similarities, dtype=np.float64), IN_CLASS_PERCENTILE, method="linear"))


def between_class_stats(similarities) -> tuple[float, float]:
    """(mean, n-1 standard deviation) of similarities to another class's center."""
    x = np.asarray(similarities, dtype=np.float64)
    return float(x.mean()), float(x.std(ddof=1))


def fit_distance_stats(clean_embeddings, clean_labels, centers: ClassCenters) -> DistanceStats:
    sims = center_similarities(clean_embeddings, centers)
    labels = np.asarray(clean_labels, dtype=np.int64)
    c = len(centers.class_ids)
    in_p5 = np.empty(c)
    mu = np.full((c, c), np.nan)
    sigma = np.full((c, c), np.nan)
    for k in range(c):
        rows = sims[labels == k]
        if len(rows) < 2:
            raise StatisticsError(f"class {k} needs at least 2 clean samples, has {len(rows)}")
        in_p5[k] = in_class_threshold(rows[:, k])
        for o in range(c):
            if o != k:
                mu[k, o], sigma[k, o] = between_class_stats(rows[:, o])
    return DistanceStats(in_p5, mu, sigma)


def _check_stats(stats: DistanceStats, claimed: np.ndarray):
    c = stats.n_classes
    if claimed.size and (claimed.min() < 0 or claimed.max() >= c):
        raise StatisticsError(f"claimed class outside the fitted classes [0, {c})")
    for k in np.unique(claimed):
        off = np.arange(c) != k
        if not np.isfinite(stats.in_p5[k]) or not np.all(np.isfinite(stats.mu[k, off])) \
                or not np.all(np.isfinite(stats.sigma[k, off])):
            raise StatisticsError(f"missing statistics for class {k}")


def clean_mask(embeddings, claimed, centers: ClassCenters, stats: DistanceStats) -> np.ndarray:
    """Vectorised :func:`is_clean` over rows of ``embeddings``."""
    claimed = np.asarray(claimed, dtype=np.int64)
    _check_stats(stats, claimed)
    sims = center_similarities(embeddings, centers)
    rows = np.arange(len(claimed))
    own = sims[rows, claimed] >= stats.in_p5[claimed]
    limits = stats.between_threshold()[claimed]  # N x c, NaN on the claimed column
    others = np.ones_like(sims, dtype=bool)
    others[rows, claimed] = False
    far = np.where(others, sims < np.nan_to_num(limits, nan=np.inf), True).all(axis=1)
    return own & far


def is_clean(e, claimed: int, centers: ClassCenters, stats: DistanceStats) -> bool:
    return bool(clean_mask(np.atleast_2d(e), [claimed], centers, stats)[0])


@dataclass
class DenoiseReport:
    kept_indices: np.ndarray
    flagged_indices: np.ndarray
    detection: MetricsReport | None = None  # class 1 = mislabeled

    @property
    def recall(self) -> float | None:
        """Share of truly mislabeled samples that were flagged; None without any."""
        if self.detection is None or self.detection.support[1] == 0:
            return None
        return float(self.detection.recall[1])

    @property
    def precision(self) -> float | None:
        return None if self.detection is None else float(self.detection.precision[1])

    @property
    def accuracy(self) -> float | None:
        return None if self.detection is None else self.detection.accuracy

    @property
    def avg_f1(self) -> float | None:
        return None if self.detection is None else self.detection.avg_f1

    def to_dict(self) -> dict:
        out = {"kept": int(len(self.kept_indices)), "flagged": int(len(self.flagged_indices)),
               "recall": self.recall if self.recall is not None else "n/a",
               "precision": self.precision, "accuracy": self.accuracy, "avg_f1": self.avg_f1}
        if self.detection is not None:
            out["f1_per_class"] = {"clean": float(self.detection.f1[0]), "mislabeled": float(self.detection.f1[1])}
        return out


def denoise_embeddings(embeddings, noisy_labels, centers: ClassCenters, stats: DistanceStats,
                       ground_truth=None) -> DenoiseReport:
    noisy = np.asarray(noisy_labels, dtype=np.int64)
    keep = clean_mask(embeddings, noisy, centers, stats)
    report = DenoiseReport(np.flatnonzero(keep), np.flatnonzero(~keep))
    if ground_truth is not None:
        mislabeled = (noisy != np.asarray(ground_truth, dtype=np.int64)).astype(np.int64)
        report.detection = metrics((~keep).astype(np.int64), mislabeled, 2)
    return report


def denoise_dataset(noisy_samples, noisy_labels, sen_weights: SENWeights, centers: ClassCenters,
                    stats: DistanceStats, ground_truth=None) -> DenoiseReport:
    """Embed tensorized samples and partition them into kept / flagged."""
    E = embed_batch(noisy_samples, sen_weights)
    return denoise_embeddings(E, noisy_labels, centers, stats, ground_truth)


def qq_data(similarities) -> list[tuple[float, float]]:
    """(standard-normal quantile, standardised order statistic) pairs.

    Plotting positions are (i - 0.5) / n; values are standardised by the
    sample mean and the n-1 standard deviation.
    """
    x = np.sort(np.asarray(similarities, dtype=np.float64))
    if x.size < 3:
        raise StatisticsError("qq_data needs at least 3 values")
    sd = x.std(ddof=1)
    if sd == 0:
        raise StatisticsError("qq_data of a constant vector")
    z = (x - x.mean()) / sd
    theo = norm.ppf((np.arange(1, x.size + 1) - 0.5) / x.size)
    return list(zip(theo.tolist(), z.tolist()))


def write_qq_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["theoretical", "empirical"])
        out.writerows(points)
