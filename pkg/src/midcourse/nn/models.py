"""The 1-D CNN and LSTM classifiers: initialization, forward, backprop, training.

Both read a row of chronologically ordered midpoint features. The CNN sees it
as a one-channel sequence of length ``n_features``; the LSTM sees one feature
per timestep with a one-dimensional input.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ..data import CLASS_NAMES, FeatureMatrix
from ..errors import DomainError, NumericError, ShapeError
from ..numeric import RngStream, derive_seed
from . import layers as L
from .adam import AdamState, adam_step

MODEL_FORMAT = "midcourse-net"
MODEL_VERSION = 1


@dataclass(frozen=True)
class CnnSpec:
    conv_filters: int = 32
    kernel_size: int = 3
    pool_size: int = 2
    dense_units: int = 128
    output_classes: int = 3
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    learning_rate: float = 0.001

    kind = "cnn"

    def __post_init__(self):
        for name in ("conv_filters", "kernel_size", "pool_size", "dense_units",
                     "output_classes", "batch_size"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise DomainError("epochs must be >= 0")

    def param_shapes(self, n_features: int) -> dict:
        conv_len = n_features - self.kernel_size + 1
        if conv_len < 1:
            raise ShapeError(f"{n_features} features is fewer than kernel_size {self.kernel_size}")
        pooled = conv_len // self.pool_size
        if pooled < 1:
            raise ShapeError(f"conv output length {conv_len} shorter than pool_size {self.pool_size}")
        flat = self.conv_filters * pooled
        return {
            "conv_W": (self.conv_filters, self.kernel_size),
            "conv_b": (self.conv_filters,),
            "dense_W": (self.dense_units, flat),
            "dense_b": (self.dense_units,),
            "out_W": (self.output_classes, self.dense_units),
            "out_b": (self.output_classes,),
        }

    def fans(self, name: str, shape) -> tuple:
        if name == "conv_W":
            return self.kernel_size, self.kernel_size * self.conv_filters
        return shape[1], shape[0]


@dataclass(frozen=True)
class LstmSpec:
    hidden_units: int = 64
    output_classes: int = 3
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    learning_rate: float = 0.001

    kind = "lstm"

    def __post_init__(self):
        for name in ("hidden_units", "output_classes", "batch_size"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise DomainError("epochs must be >= 0")

    def param_shapes(self, n_features: int) -> dict:
        if n_features < 1:
            raise ShapeError("LSTM needs at least one timestep")
        h = self.hidden_units
        return {
            "lstm_Wx": (4 * h, 1),
            "lstm_Wh": (4 * h, h),
            "lstm_b": (4 * h,),
            "out_W": (self.output_classes, h),
            "out_b": (self.output_classes,),
        }

    def fans(self, name: str, shape) -> tuple:
        return shape[1], shape[0]


NetSpec = Union[CnnSpec, LstmSpec]
SPEC_TYPES = {"cnn": CnnSpec, "lstm": LstmSpec}


def spec_from_dict(kind: str, d: dict) -> NetSpec:
    try:
        cls = SPEC_TYPES[kind]
    except KeyError:
        raise DomainError(f"unknown network kind {kind!r}") from None
    return cls(**d)


def init_params(spec: NetSpec, n_features: int, rng: RngStream) -> dict:
    """Glorot-uniform weights, zero biases; drawn in sorted parameter-name order."""
    shapes = spec.param_shapes(n_features)
    params = {}
    for name in sorted(shapes):
        shape = shapes[name]
        if len(shape) == 1:
            params[name] = np.zeros(shape)
            continue
        fan_in, fan_out = spec.fans(name, shape)
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = (rng.uniform(int(np.prod(shape))) * 2.0 - 1.0).reshape(shape) * limit
    return params


# --------------------------------------------------------------------------
# forward / backward


def _cnn_forward(spec: CnnSpec, p: dict, x):
    z1, windows = L.conv1d_pre(x, p["conv_W"], p["conv_b"])
    a1 = L.relu(z1)
    L.check_finite("conv1d", a1)
    pooled, idx = L.maxpool1d(a1, spec.pool_size)
    flat = pooled.reshape(pooled.shape[0], -1)
    z2 = flat @ p["dense_W"].T + p["dense_b"]
    a2 = L.relu(z2)
    L.check_finite("dense", a2)
    logits = a2 @ p["out_W"].T + p["out_b"]
    probs = L.softmax(logits)
    L.check_finite("output", probs)
    return probs, (windows, z1, idx, pooled.shape, flat, z2, a2)


def _cnn_backward(spec: CnnSpec, p: dict, cache, dlogits):
    windows, z1, idx, pooled_shape, flat, z2, a2 = cache
    g = {"out_W": dlogits.T @ a2, "out_b": dlogits.sum(axis=0)}
    da2 = dlogits @ p["out_W"]
    dz2 = da2 * (z2 > 0)
    g["dense_W"] = dz2.T @ flat
    g["dense_b"] = dz2.sum(axis=0)
    dflat = dz2 @ p["dense_W"]
    da1 = L.maxpool1d_backward(dflat.reshape(pooled_shape), idx, z1.shape[-1])
    dz1 = da1 * (z1 > 0)
    g["conv_W"], g["conv_b"] = L.conv1d_backward(dz1, windows)
    return g


def _lstm_forward(spec: LstmSpec, p: dict, x):
    seq = x[:, :, None]
    h, cache = L.lstm_sequence(seq, p["lstm_Wx"], p["lstm_Wh"], p["lstm_b"])
    L.check_finite("lstm", h)
    logits = h @ p["out_W"].T + p["out_b"]
    probs = L.softmax(logits)
    L.check_finite("output", probs)
    return probs, (h, cache)


def _lstm_backward(spec: LstmSpec, p: dict, cache, dlogits):
    h, steps = cache
    g = {"out_W": dlogits.T @ h, "out_b": dlogits.sum(axis=0)}
    dh = dlogits @ p["out_W"]
    g["lstm_Wx"], g["lstm_Wh"], g["lstm_b"] = L.lstm_backward(dh, steps, p["lstm_Wx"], p["lstm_Wh"])
    return g


_FORWARD = {"cnn": _cnn_forward, "lstm": _lstm_forward}
_BACKWARD = {"cnn": _cnn_backward, "lstm": _lstm_backward}


def forward(spec: NetSpec, params: dict, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("network input must be a 2-D batch (rows x features)")
    L.check_finite("input", x)
    return _FORWARD[spec.kind](spec, params, x)


def loss_and_grads(spec: NetSpec, params: dict, x, y):
    """Mean batch cross-entropy and its exact gradient for every parameter."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0:
        raise DomainError("batch must be non-empty")
    probs, cache = forward(spec, params, x)
    loss, dlogits = L.batch_cross_entropy(probs, y)
    grads = _BACKWARD[spec.kind](spec, params, cache, dlogits)
    for name, g in grads.items():
        L.check_finite(f"grad:{name}", g)
    return loss, grads


def batch_loss(spec: NetSpec, params: dict, x, y) -> float:
    probs, _ = forward(spec, params, x)
    return L.batch_cross_entropy(probs, np.asarray(y, dtype=np.int64))[0]


# --------------------------------------------------------------------------
# trained network


@dataclass(frozen=True)
class TrainedNet:
    architecture: NetSpec
    parameters: dict
    n_features: int
    class_order: tuple = CLASS_NAMES
    training_log: tuple = field(default=())

    def predict_proba(self, rows) -> np.ndarray:
        x = np.asarray(rows, dtype=np.float64)
        if x.ndim == 1:
            x = x[None]
        if x.shape[1] != self.n_features:
            raise ShapeError(f"input has {x.shape[1]} features, network expects {self.n_features}")
        probs, _ = forward(self.architecture, self.parameters, x)
        return probs

    def predict(self, rows):
        """``(classes, probabilities)``; exact ties resolve toward the more at-risk class."""
        probs = self.predict_proba(rows)
        return argmax_worst(probs), probs

    def predict_labels(self, rows) -> np.ndarray:
        return self.predict(rows)[0]

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "architecture": self.architecture.kind,
            "hyperparameters": asdict(self.architecture),
            "seed": self.architecture.seed,
            "n_features": self.n_features,
            "class_order": list(self.class_order),
            "training_log": [float(v) for v in self.training_log],
            "parameters": {
                k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                for k, v in sorted(self.parameters.items())
            },
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedNet":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DomainError(f"unsupported model file format {d.get('format')!r} v{d.get('version')}")
        spec = spec_from_dict(d["architecture"], d["hyperparameters"])
        params = {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"])
                  for k, v in d["parameters"].items()}
        return cls(spec, params, int(d["n_features"]), tuple(d["class_order"]),
                   tuple(d["training_log"]))

    @classmethod
    def from_json(cls, text: str) -> "TrainedNet":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "TrainedNet":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def argmax_worst(probs) -> np.ndarray:
    """Row-wise argmax picking the highest class index among exact ties."""
    probs = np.asarray(probs)
    rev = probs[:, ::-1]
    return probs.shape[1] - 1 - rev.argmax(axis=1)


def backprop(net: TrainedNet, inputs, targets) -> dict:
    return loss_and_grads(net.architecture, net.parameters, inputs, targets)[1]


def train(spec: NetSpec, train_data: FeatureMatrix) -> TrainedNet:
    """Seeded mini-batch Adam training for ``spec.epochs`` epochs."""
    x = train_data.rows
    y = train_data.labels
    n, d = x.shape
    if len(np.unique(y)) < 2:
        raise DomainError("training data must contain at least two classes")
    params = init_params(spec, d, RngStream(derive_seed(spec.seed, "init")))
    state = AdamState.for_params(params, learning_rate=spec.learning_rate)
    order_rng = RngStream(derive_seed(spec.seed, "shuffle"))
    log = []
    for epoch in range(spec.epochs):
        perm = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, spec.batch_size):
            idx = perm[start:start + spec.batch_size]
            try:
                loss, grads = loss_and_grads(spec, params, x[idx], y[idx])
            except NumericError as e:
                raise NumericError(f"epoch {epoch}: {e}") from e
            params, state = adam_step(state, params, grads)
            total += loss * len(idx)
        mean = total / n
        if not np.isfinite(mean):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        log.append(mean)
    return TrainedNet(spec, params, d, CLASS_NAMES, tuple(log))


def predict(net: TrainedNet, data: FeatureMatrix):
    return net.predict(data.rows)
