"""Resampling, windowing, splitting and label/signal perturbation."""

from __future__ import annotations

import numpy as np

from senhar.datasets.base import Recording, SampleSet
from senhar.errors import ConfigurationError, ContractError
from senhar.signal import DEFAULT_RATE, DEFAULT_WINDOW_SECONDS, RawSample

GAP_SECONDS = 1.0


def _runs(times: np.ndarray, gap: float) -> list[tuple[float, float]]:
    """Maximal [start, end] spans without a gap longer than ``gap`` seconds."""
    if len(times) == 0:
        return []
    breaks = np.flatnonzero(np.diff(times) > gap)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(times) - 1]])
    return [(times[s], times[e]) for s, e in zip(starts, ends)]


def _intersect(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out = []
    for s1, e1 in a:
        for s2, e2 in b:
            lo, hi = max(s1, s2), min(e1, e2)
            if hi > lo:
                out.append((lo, hi))
    return sorted(out)


def downsample(recording: Recording, target_rate: float = DEFAULT_RATE,
               gap_seconds: float = GAP_SECONDS) -> list[Recording]:
    """Linearly interpolate all sensors onto one shared even grid.

    The grid starts at the latest sensor start of each overlapping span, so
    independent sensor clocks end up aligned. Gaps longer than
    ``gap_seconds`` split the recording, hence the list result.
    """
    for t in recording.times:
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ContractError("recording timestamps must be strictly increasing")
        if len(t) > 1 and 1.0 / np.median(np.diff(t)) < target_rate * (1 - 1e-6):
            raise ContractError(f"native rate {1.0 / np.median(np.diff(t)):.2f} Hz is below target {target_rate} Hz")
    spans = _runs(recording.times[0], gap_seconds)
    for t in recording.times[1:]:
        spans = _intersect(spans, _runs(t, gap_seconds))

    out = []
    for lo, hi in spans:
        m = int(np.floor((hi - lo) * target_rate + 1e-9)) + 1
        grid = lo + np.arange(m) / target_rate
        values = [np.stack([np.interp(grid, t, v[a]) for a in range(v.shape[0])])
                  for t, v in zip(recording.times, recording.values)]
        out.append(Recording([grid] * recording.n_sensors, values, recording.label,
                             recording.user_id, recording.device_id))
    return out


def segment(recording: Recording, duration: float = DEFAULT_WINDOW_SECONDS,
            sample_rate: float = DEFAULT_RATE) -> list[RawSample]:
    """Non-overlapping windows of ``duration`` seconds; the remainder is dropped."""
    lengths = {v.shape[1] for v in recording.values}
    if len(lengths) != 1:
        raise ContractError("segment needs sensors resampled onto a shared grid")
    n = lengths.pop()
    w = int(round(duration * sample_rate))
    stacked = np.stack(recording.values)  # |S| x 3 x n
    return [RawSample(stacked[:, :, i * w:(i + 1) * w].copy(), recording.label,
                      recording.user_id, recording.device_id)
            for i in range(n // w)]


def preprocess(recordings, target_rate: float = DEFAULT_RATE, duration: float = DEFAULT_WINDOW_SECONDS,
               gap_seconds: float = GAP_SECONDS, provenance: dict | None = None) -> SampleSet:
    samples = []
    for rec in recordings:
        for piece in downsample(rec, target_rate, gap_seconds):
            samples.extend(segment(piece, duration, target_rate))
    prov = dict(provenance or {})
    prov.update(sample_rate=target_rate, window_seconds=duration, gap_seconds=gap_seconds)
    return SampleSet(samples, prov)


def split(samples: SampleSet, mode: str = "fraction", train_frac: float = 0.8, seed: int = 0,
          user: str | None = None) -> tuple[SampleSet, SampleSet]:
    """Shuffled fraction split, or leave-one-user-out with ``user`` as test."""
    n = len(samples)
    if mode == "fraction":
        if not 0 < train_frac < 1:
            raise ConfigurationError(f"train_frac must lie in (0, 1), got {train_frac}")
        order = np.random.default_rng(seed).permutation(n)
        cut = int(round(train_frac * n))
        return samples.subset(order[:cut]), samples.subset(order[cut:])
    if mode in ("louo", "leave_one_user_out"):
        users = samples.users
        if user is None or user not in set(users.tolist()):
            raise ConfigurationError(f"unknown user {user!r} for leave-one-user-out split")
        test = users == user
        return samples.subset(np.flatnonzero(~test)), samples.subset(np.flatnonzero(test))
    raise ConfigurationError(f"unknown split mode {mode!r}")


def louo_users(samples: SampleSet) -> list[str]:
    return sorted(set(samples.users.tolist()))


def stratified_subsample(samples: SampleSet, per_class: int, seed: int) -> SampleSet:
    """``per_class`` random samples of every class present."""
    rng = np.random.default_rng(seed)
    labels = samples.labels
    picked = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if per_class > len(idx):
            raise ConfigurationError(f"class {c} has {len(idx)} samples, {per_class} requested")
        picked.extend(rng.choice(idx, size=per_class, replace=False).tolist())
    return samples.subset(sorted(picked))


def inject_label_noise(samples: SampleSet, rate: float, seed: int, n_classes: int | None = None) -> SampleSet:
    """Flip exactly ``round(rate * N)`` labels to a different, uniformly chosen class.

    Signals are shared with the input, not copied. The labels before flipping
    are kept in ``original_labels``.
    """
    if not 0 <= rate <= 1:
        raise ConfigurationError(f"noise rate must lie in [0, 1], got {rate}")
    labels = samples.labels
    c = n_classes if n_classes is not None else int(labels.max()) + 1
    if c < 2:
        raise ConfigurationError("label noise needs at least two classes")
    rng = np.random.default_rng(seed)
    n_flip = int(round(rate * len(labels)))
    chosen = rng.choice(len(labels), size=n_flip, replace=False)
    new = labels.copy()
    for i in chosen:
        shift = rng.integers(1, c)
        new[i] = (labels[i] + shift) % c
    flipped = [RawSample(s.sensors, int(lab), s.user_id, s.device_id, s.meta)
               if lab != s.label else s for s, lab in zip(samples.samples, new)]
    original = labels if samples.original_labels is None else samples.original_labels
    prov = dict(samples.provenance, noise_rate=rate, noise_seed=seed)
    return SampleSet(flipped, prov, original.copy())


def augment_gaussian(samples: SampleSet, copies: int, noise_std_fraction: float, seed: int) -> SampleSet:
    """Append ``copies`` noisy duplicates of each sample.

    Per-axis noise std is ``noise_std_fraction`` times that axis's std within
    the sample.
    """
    if copies < 1:
        raise ConfigurationError("copies must be >= 1")
    rng = np.random.default_rng(seed)
    extra = []
    for _ in range(copies):
        for s in samples.samples:
            std = s.sensors.std(axis=2, keepdims=True) * noise_std_fraction
            noisy = s.sensors + rng.standard_normal(s.sensors.shape) * std
            extra.append(RawSample(noisy, s.label, s.user_id, s.device_id, s.meta))
    orig = samples.original_labels
    if orig is not None:
        orig = np.concatenate([orig] * (copies + 1))
    prov = dict(samples.provenance, augment_copies=copies, augment_std_fraction=noise_std_fraction)
    return SampleSet(list(samples.samples) + extra, prov, orig)
