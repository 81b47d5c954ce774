from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from senhar.signal import RawSample

ACTIVITIES = {
    "hhar": ("Standing", "Sitting", "Walking", "Upstairs", "Downstairs", "Biking"),
    "usc_had": ("Standing", "Sitting", "Walking", "Upstairs", "Downstairs", "Running"),
}


@dataclass
class Recording:
    """Continuous readings of one (user, device, activity) session.

    ``times[s]`` are seconds, strictly increasing; ``values[s]`` is ``3 x n``.
    """

    times: list[np.ndarray]
    values: list[np.ndarray]
    label: int
    user_id: str = ""
    device_id: str = ""

    @property
    def n_sensors(self) -> int:
        return len(self.times)


@dataclass
class SampleSet:
    samples: list[RawSample]
    provenance: dict = field(default_factory=dict)
    original_labels: np.ndarray | None = None

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, idx):
        return self.samples[idx]

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def users(self) -> np.ndarray:
        return np.array([s.user_id for s in self.samples])

    @property
    def signals(self) -> np.ndarray:
        return np.stack([s.sensors for s in self.samples])

    @property
    def noise_mask(self) -> np.ndarray:
        """True where a label differs from the recorded original."""
        if self.original_labels is None:
            return np.zeros(len(self), dtype=bool)
        return self.labels != self.original_labels

    def subset(self, indices) -> "SampleSet":
        idx = np.asarray(indices, dtype=np.int64)
        orig = None if self.original_labels is None else self.original_labels[idx]
        return SampleSet([self.samples[i] for i in idx], dict(self.provenance), orig)
