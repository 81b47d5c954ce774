"""Frequency-domain tensorization of two-sensor motion samples.

A sample holds ``|S|`` sensors with 3 axes each. Every sensor gains an
amplitude axis, is cut into ``k`` equal intervals, and each interval/axis is
replaced by two rows: spectrum magnitudes and the matching bin frequencies.
The result has shape ``k x |S| x 8 x f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from senhar.errors import ContractError, SegmentationError

DEFAULT_RATE = 25.0
DEFAULT_WINDOW_SECONDS = 6
DEFAULT_INTERVALS = 6


@dataclass
class RawSample:
    """One window of readings: ``sensors[s]`` is a ``3 x n`` matrix (x, y, z)."""

    sensors: np.ndarray
    label: int
    user_id: str = ""
    device_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sensors = np.asarray(self.sensors, dtype=np.float64)
        if self.sensors.ndim != 3 or self.sensors.shape[1] != 3:
            raise ContractError(f"sensors must be |S| x 3 x n, got {self.sensors.shape}")

    @property
    def n(self) -> int:
        return self.sensors.shape[2]


def amplitude_augment(series: np.ndarray) -> np.ndarray:
    """Append sqrt(x^2 + y^2 + z^2) as a fourth row."""
    series = np.asarray(series, dtype=np.float64)
    amp = np.sqrt(np.sum(series[-3:] ** 2, axis=-2, keepdims=True))
    return np.concatenate([series, amp], axis=-2)


def split_intervals(series: np.ndarray, k: int) -> list[np.ndarray]:
    """Cut the time axis into ``k`` contiguous equal blocks."""
    n = series.shape[-1]
    if k < 1 or n % k:
        raise SegmentationError(f"cannot split n={n} readings into k={k} equal intervals")
    w = n // k
    return [series[..., i * w:(i + 1) * w] for i in range(k)]


def interval_fft(axis_series: np.ndarray, sample_rate: float = DEFAULT_RATE) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised real-FFT magnitudes and bin-center frequencies (Hz).

    Works along the last axis, so a stack of series can be passed at once.
    """
    x = np.asarray(axis_series, dtype=np.float64)
    w = x.shape[-1]
    if w < 2:
        raise ContractError(f"interval needs at least 2 readings, got {w}")
    mags = np.abs(np.fft.rfft(x, axis=-1))
    freqs = np.arange(w // 2 + 1) * (sample_rate / w)
    return mags, freqs


def n_bins(window: int) -> int:
    return window // 2 + 1


def tensorize(sample: RawSample | np.ndarray, k: int = DEFAULT_INTERVALS, sample_rate: float = DEFAULT_RATE,
              freq_layout: str = "bin") -> np.ndarray:
    """Build the ``k x |S| x 8 x f`` input tensor for one sample.

    ``freq_layout="bin"`` keeps natural bin order (frequency rows constant
    across samples). ``"ranked"`` reorders each magnitude/frequency row pair by
    descending magnitude.
    """
    sensors = sample.sensors if isinstance(sample, RawSample) else np.asarray(sample, dtype=np.float64)
    if not np.all(np.isfinite(sensors)):
        raise ContractError("sample contains non-finite readings")
    aug = amplitude_augment(sensors)  # |S| x 4 x n
    blocks = np.stack(split_intervals(aug, k), axis=0)  # k x |S| x 4 x w
    mags, freqs = interval_fft(blocks, sample_rate)  # k x |S| x 4 x f
    freq_rows = np.broadcast_to(freqs, mags.shape)
    if freq_layout == "ranked":
        order = np.argsort(-mags, axis=-1, kind="stable")
        mags = np.take_along_axis(mags, order, axis=-1)
        freq_rows = np.take_along_axis(freq_rows, order, axis=-1)
    elif freq_layout != "bin":
        raise ContractError(f"unknown freq_layout {freq_layout!r}")
    kk, s, a, f = mags.shape
    out = np.empty((kk, s, 2 * a, f))
    out[:, :, 0::2] = mags
    out[:, :, 1::2] = freq_rows
    return out


def tensorize_many(samples, k: int = DEFAULT_INTERVALS, sample_rate: float = DEFAULT_RATE,
                   freq_layout: str = "bin") -> np.ndarray:
    """Stack :func:`tensorize` over samples into ``N x k x |S| x 8 x f``."""
    return np.stack([tensorize(s, k, sample_rate, freq_layout) for s in samples], axis=0)
