"""Hierarchical CNN + two-layer LSTM embedding encoder.

Per interval and per sensor, a within-axis convolution (height 2) reads each
axis's magnitude/frequency row pair; the four axis outputs are stacked and an
axis-merge convolution (height 4) mixes them. Sensor outputs are stacked and
two sensor-merge convolutions (heights |S| then 1) follow. The flattened
interval features run through two LSTM layers in time order and the second
layer's outputs are averaged into the embedding.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from senhar.core import tensor as T
from senhar.core.functional import LSTMWeights, conv1d, glorot_uniform, lstm_step, lstm_uniform
from senhar.core.tensor import Tensor
from senhar.errors import ConfigurationError, DimensionError

N_AXES = 4  # x, y, z, amplitude


@dataclass
class SENConfig:
    conv1: int = 5
    conv2: int = 3
    conv3: int = 3
    conv4: int = 3
    channels: int = 64
    lstm_hidden: int = 64
    k: int = 6
    f: int = 13
    n_sensors: int = 2
    seed: int = 0

    def widths(self) -> list[int]:
        """Per-interval horizontal extent entering and leaving each conv stage."""
        out = [self.f]
        for fw in (self.conv1, self.conv2, self.conv3, self.conv4):
            out.append(out[-1] - fw + 1)
        return out

    def validate(self):
        problems = []
        for name in ("conv1", "conv2", "conv3", "conv4"):
            if getattr(self, name) < 1:
                problems.append(f"{name} width must be >= 1")
        stages = ("within-axis (conv1)", "axis-merge (conv2)", "sensor-merge (conv3)", "sensor-merge (conv4)")
        for stage, w in zip(stages, self.widths()[1:]):
            if w < 1:
                problems.append(f"{stage} output width {w} < 1")
        if self.lstm_hidden < 2:
            problems.append("lstm_hidden must be >= 2")
        if self.channels < 1:
            problems.append("channels must be >= 1")
        if self.k < 1:
            problems.append("k must be >= 1")
        if self.n_sensors < 1:
            problems.append("n_sensors must be >= 1")
        if problems:
            raise ConfigurationError("invalid SEN config: " + "; ".join(problems))

    @property
    def embedding_dim(self) -> int:
        return self.lstm_hidden

    @property
    def feature_dim(self) -> int:
        return self.channels * self.widths()[-1]

    @property
    def input_shape(self) -> tuple[int, ...]:
        return (self.k, self.n_sensors, 2 * N_AXES, self.f)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SENWeights:
    config: SENConfig
    params: dict[str, Tensor] = field(default_factory=dict)

    def lstm(self, layer: int) -> LSTMWeights:
        p = self.params
        return LSTMWeights(p[f"lstm{layer}.w_x"], p[f"lstm{layer}.w_h"], p[f"lstm{layer}.b"])

    def copy(self) -> "SENWeights":
        return SENWeights(self.config, {n: Tensor(t.data.copy(), requires_grad=True, name=n)
                                        for n, t in self.params.items()})


def expected_shapes(config: SENConfig) -> dict[str, tuple[int, ...]]:
    C, H = config.channels, config.lstm_hidden
    shapes = {}
    for s in range(config.n_sensors):
        shapes[f"within{s}.w"] = (C, 1, 2, config.conv1)
        shapes[f"within{s}.b"] = (C,)
        shapes[f"axis{s}.w"] = (C, C, N_AXES, config.conv2)
        shapes[f"axis{s}.b"] = (C,)
    shapes["sensor1.w"] = (C, C, config.n_sensors, config.conv3)
    shapes["sensor1.b"] = (C,)
    shapes["sensor2.w"] = (C, C, 1, config.conv4)
    shapes["sensor2.b"] = (C,)
    for layer, in_size in ((1, config.feature_dim), (2, H)):
        shapes[f"lstm{layer}.w_x"] = (4 * H, in_size)
        shapes[f"lstm{layer}.w_h"] = (4 * H, H)
        shapes[f"lstm{layer}.b"] = (4 * H,)
    return shapes


def init_network(config: SENConfig) -> SENWeights:
    """Seeded Glorot-uniform convolutions and uniform LSTM gates."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    params: dict[str, Tensor] = {}
    for name, shape in expected_shapes(config).items():
        if name.startswith("lstm"):
            continue
        if name.endswith(".w"):
            c_out, c_in, fh, fw = shape
            params[name] = glorot_uniform(rng, shape, c_in * fh * fw, c_out * fh * fw, name=name)
        else:
            params[name] = Tensor(np.zeros(shape), requires_grad=True, name=name)
    for layer, in_size in ((1, config.feature_dim), (2, config.lstm_hidden)):
        lw = lstm_uniform(rng, in_size, config.lstm_hidden, prefix=f"lstm{layer}")
        params[lw.w_x.name] = lw.w_x
        params[lw.w_h.name] = lw.w_h
        params[lw.b.name] = lw.b
    return SENWeights(config, params)


def _as_batch(xs, config: SENConfig) -> np.ndarray:
    x = np.asarray(xs, dtype=np.float64) if not isinstance(xs, list) else np.stack(xs).astype(np.float64)
    if x.ndim != 5 or x.shape[1:] != config.input_shape:
        raise DimensionError(f"input stage: expected N x {config.input_shape}, got {x.shape}")
    return x


def forward(w: SENWeights, xs) -> Tensor:
    """Differentiable embedding of a batch ``N x k x |S| x 8 x f`` -> ``N x l``."""
    cfg = w.config
    p = w.params
    x = _as_batch(xs, cfg)
    N, k, S = x.shape[0], cfg.k, cfg.n_sensors
    C = cfg.channels
    widths = cfg.widths()

    per_sensor = []
    for s in range(S):
        # axis rows (2a, 2a+1) become a 1-channel 2 x f image per axis
        xs_ = Tensor(x[:, :, s].reshape(N, k, N_AXES, 1, 2, cfg.f))
        h = T.relu(conv1d(xs_, p[f"within{s}.w"], p[f"within{s}.b"]))  # N,k,4,C,1,W1
        h = T.transpose(T.reshape(h, (N, k, N_AXES, C, widths[1])), (0, 1, 3, 2, 4))  # N,k,C,4,W1
        h = T.relu(conv1d(h, p[f"axis{s}.w"], p[f"axis{s}.b"]))  # N,k,C,1,W2
        per_sensor.append(h)
    h = T.concat(per_sensor, axis=-2) if S > 1 else per_sensor[0]  # N,k,C,S,W2
    h = T.relu(conv1d(h, p["sensor1.w"], p["sensor1.b"]))  # N,k,C,1,W3
    h = T.relu(conv1d(h, p["sensor2.w"], p["sensor2.b"]))  # N,k,C,1,W4
    feats = T.reshape(h, (N, k, cfg.feature_dim))

    H = cfg.lstm_hidden
    seq = [feats[:, t] for t in range(k)]
    for layer in (1, 2):
        lw = w.lstm(layer)
        h_t, c_t = Tensor(np.zeros((N, H))), Tensor(np.zeros((N, H)))
        outs = []
        for x_t in seq:
            h_t, c_t = lstm_step(x_t, h_t, c_t, lw)
            outs.append(h_t)
        seq = outs
    if k == 1:
        return seq[0]
    return T.stack(seq, axis=1).mean(axis=1)


def embed_batch(xs, w: SENWeights) -> np.ndarray:
    """Embeddings for a batch, one row per input, in input order."""
    return forward(w, xs).data


def embed(x, w: SENWeights) -> np.ndarray:
    return embed_batch(np.asarray(x, dtype=np.float64)[None], w)[0]


def stage_shapes(config: SENConfig) -> dict[str, tuple[int, ...]]:
    """Per-interval activation shapes after each stage (channels first)."""
    C, W = config.channels, config.widths()
    return {
        "input": (config.n_sensors, 2 * N_AXES, W[0]),
        "within_axis": (config.n_sensors, C, N_AXES, W[1]),
        "axis_merge": (C, config.n_sensors, W[2]),
        "sensor_merge_1": (C, 1, W[3]),
        "sensor_merge_2": (C, 1, W[4]),
        "flatten": (config.feature_dim,),
        "embedding": (config.lstm_hidden,),
    }
