"""Experiment configuration: ``key = value`` files plus ``--key=value`` overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

from senhar.classifiers import HeadConfig
from senhar.errors import ConfigurationError
from senhar.network import SENConfig
from senhar.pairwise import TrainConfig
from senhar.signal import n_bins

CLASSIFIERS = ("sm", "knn", "mlp", "baseline")


@dataclass
class ExperimentConfig:
    seed: int | None = None
    dataset: str = "synth"  # synth | hhar | usc_had
    data_path: str = ""
    cache: str = ""
    output_dir: str = "runs/latest"
    checkpoint: str = ""
    # synthetic data
    classes: int = 6
    train_per_class: int = 30
    test_per_class: int = 50
    synth_noise: float = 1.0
    # preprocessing
    sample_rate: float = 25.0
    window_seconds: float = 6.0
    intervals: int = 6
    freq_layout: str = "bin"
    gap_seconds: float = 1.0
    split: str = "fraction"  # fraction | louo
    train_frac: float = 0.8
    louo_user: str = ""
    augment_copies: int = 0
    augment_std: float = 0.1
    # encoder
    conv1: int = 5
    conv2: int = 3
    conv3: int = 3
    conv4: int = 3
    channels: int = 64
    lstm_hidden: int = 64
    # pairwise training
    sigmoid_k: float = 10.0
    batch_pairs: int = 128
    positive_fraction: float = 0.5
    sen_epochs: int = 100
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    # heads and baseline
    classifiers: str = "sm,knn,mlp,baseline"
    k_nn: int = 5
    head_hidden: int = 64
    head_epochs: int = 200
    head_learning_rate: float = 1e-3
    head_batch: int = 32
    # experiments
    noise_rate: float = 0.0
    noise_rates: str = "0.4"
    stress_sizes: str = "30,80,110,140,170,200"
    clean_per_class: int = 30
    contamination: float = 0.4

    # -- derived views ---------------------------------------------------

    @property
    def window(self) -> int:
        return int(round(self.sample_rate * self.window_seconds)) // self.intervals

    def sen_config(self) -> SENConfig:
        return SENConfig(conv1=self.conv1, conv2=self.conv2, conv3=self.conv3, conv4=self.conv4,
                         channels=self.channels, lstm_hidden=self.lstm_hidden, k=self.intervals,
                         f=n_bins(self.window), seed=self.seed)

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(sigmoid_k=self.sigmoid_k, batch_pairs=self.batch_pairs,
                           positive_fraction=self.positive_fraction, epochs=self.sen_epochs,
                           learning_rate=self.learning_rate, optimizer=self.optimizer,
                           seed=self.seed if seed is None else seed)

    def head_config(self) -> HeadConfig:
        return HeadConfig(hidden=self.head_hidden, epochs=self.head_epochs, learning_rate=self.head_learning_rate,
                          batch_size=self.head_batch, optimizer=self.optimizer, seed=self.seed)

    @property
    def classifier_list(self) -> list[str]:
        return [c.strip() for c in self.classifiers.split(",") if c.strip()]

    @property
    def noise_rate_list(self) -> list[float]:
        return [float(r) for r in self.noise_rates.split(",") if r.strip()]

    @property
    def stress_size_list(self) -> list[int]:
        return [int(s) for s in self.stress_sizes.split(",") if s.strip()]

    def validate(self) -> "ExperimentConfig":
        if self.seed is None:
            raise ConfigurationError("seed is mandatory")
        if self.dataset not in ("synth", "hhar", "usc_had"):
            raise ConfigurationError(f"unknown dataset {self.dataset!r}")
        if self.dataset != "synth" and not self.cache:
            if not self.data_path or not Path(self.data_path).exists():
                raise ConfigurationError(f"data_path {self.data_path!r} does not exist")
        for p in (self.cache, self.checkpoint):
            if p and not Path(p).exists():
                raise ConfigurationError(f"path {p!r} does not exist")
        unknown = set(self.classifier_list) - set(CLASSIFIERS)
        if unknown:
            raise ConfigurationError(f"unknown classifiers {sorted(unknown)}")
        if int(round(self.sample_rate * self.window_seconds)) % self.intervals:
            raise ConfigurationError("intervals must divide the readings per window")
        self.sen_config().validate()
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


def _convert(name: str, value: str, default):
    try:
        if name == "seed":
            return int(value)
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: {value!r}") from None


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_config(values: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    known = {f.name: f for f in fields(ExperimentConfig)}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        if raw in ("None", "") and key == "seed":
            continue
        setattr(cfg, key, _convert(key, raw, getattr(ExperimentConfig(), key)))
    return cfg


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    values = parse_kv(Path(path).read_text()) if path else {}
    values.update(overrides or {})
    return build_config(values)
