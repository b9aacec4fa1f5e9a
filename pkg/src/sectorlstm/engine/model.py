"""Stacked LSTM regressor written directly against numpy.

Network: LSTM(seq) -> dropout -> LSTM(last state) -> dropout ->
dense(relu) -> dense(1, sigmoid).

Arrays use the row-vector convention: a batch of inputs has shape
(batch, steps, features) and a layer computes ``x @ W.T + b``. LSTM gate
blocks are stacked in the order input, forget, candidate, output along
the first axis of ``W``, ``U`` and ``b``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Literal, Optional

import numpy as np

from ..errors import ShapeMismatch, StaleCache

Mode = Literal["train", "infer"]
GATES = ("i", "f", "g", "o")


@dataclass(frozen=True)
class ModelConfig:
    lookback: int = 50
    feature_count: int = 1
    lstm_units: int = 256
    lstm_layers: int = 2
    dropout_rate: float = 0.30
    dense_units: int = 256
    batch_size: int = 64
    epochs: int = 100
    huber_delta: float = 1.0
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        for name in ("lookback", "feature_count", "lstm_units", "lstm_layers",
                     "dense_units", "batch_size", "epochs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class LstmLayerParams:
    W: np.ndarray  # (4 * units, input_dim)
    U: np.ndarray  # (4 * units, units)
    b: np.ndarray  # (4 * units,)

    @property
    def units(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Weights of one gate as ``(W, U, b)`` views."""
        k = GATES.index(name)
        rows = slice(k * self.units, (k + 1) * self.units)
        return self.W[rows], self.U[rows], self.b[rows]


@dataclass(frozen=True, eq=False)
class DenseLayerParams:
    W: np.ndarray  # (out_dim, in_dim)
    b: np.ndarray  # (out_dim,)
    activation: Literal["relu", "sigmoid"]

    def __post_init__(self):
        if self.activation not in ("relu", "sigmoid"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    lstm_layers: tuple[LstmLayerParams, ...]
    hidden_dense: DenseLayerParams
    output_dense: DenseLayerParams
    config: ModelConfig

    def __post_init__(self):
        object.__setattr__(self, "lstm_layers", tuple(self.lstm_layers))
        expected = expected_shapes(self.config)
        actual = {k: v.shape for k, v in self.tensors().items()}
        if actual != expected:
            raise ShapeMismatch(f"parameter shapes {actual} do not match config {expected}")

    def tensors(self) -> dict[str, np.ndarray]:
        """Every trainable array keyed by a stable name."""
        out = {}
        for k, layer in enumerate(self.lstm_layers):
            out[f"lstm{k}.W"] = layer.W
            out[f"lstm{k}.U"] = layer.U
            out[f"lstm{k}.b"] = layer.b
        out["dense.W"] = self.hidden_dense.W
        out["dense.b"] = self.hidden_dense.b
        out["out.W"] = self.output_dense.W
        out["out.b"] = self.output_dense.b
        return out

    @classmethod
    def from_tensors(cls, config: ModelConfig, t: dict[str, np.ndarray]) -> "ModelParams":
        layers = tuple(
            LstmLayerParams(t[f"lstm{k}.W"], t[f"lstm{k}.U"], t[f"lstm{k}.b"])
            for k in range(config.lstm_layers)
        )
        return cls(
            layers,
            DenseLayerParams(t["dense.W"], t["dense.b"], "relu"),
            DenseLayerParams(t["out.W"], t["out.b"], "sigmoid"),
            config,
        )

    def copy(self) -> "ModelParams":
        return ModelParams.from_tensors(self.config, {k: v.copy() for k, v in self.tensors().items()})


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    units = config.lstm_units
    in_dim = config.feature_count
    for k in range(config.lstm_layers):
        shapes[f"lstm{k}.W"] = (4 * units, in_dim)
        shapes[f"lstm{k}.U"] = (4 * units, units)
        shapes[f"lstm{k}.b"] = (4 * units,)
        in_dim = units
    shapes["dense.W"] = (config.dense_units, units)
    shapes["dense.b"] = (config.dense_units,)
    shapes["out.W"] = (1, config.dense_units)
    shapes["out.b"] = (1,)
    return shapes


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(config: ModelConfig) -> ModelParams:
    """Glorot-uniform weights, zero biases except forget-gate biases of 1.0."""
    rng = np.random.default_rng(config.seed)
    tensors = {}
    units = config.lstm_units
    for name, shape in expected_shapes(config).items():
        if name.endswith(".b"):
            b = np.zeros(shape)
            if name.startswith("lstm"):
                b[units:2 * units] = 1.0
            tensors[name] = b
        else:
            fan_out, fan_in = shape
            limit = glorot_limit(fan_in, fan_out)
            tensors[name] = rng.uniform(-limit, limit, size=shape)
    return ModelParams.from_tensors(config, tensors)


def sigmoid(x):
    # tanh form avoids overflow in exp for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def lstm_cell_step(layer: LstmLayerParams, x_t, h_prev, c_prev) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM time step; accepts single vectors or a leading batch axis."""
    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))
    if x_t.shape[-1] != layer.input_dim or h_prev.shape[-1] != layer.units or c_prev.shape != h_prev.shape:
        raise ShapeMismatch(
            f"cell expects input {layer.input_dim} / state {layer.units}, "
            f"got {x_t.shape}, {h_prev.shape}, {c_prev.shape}"
        )
    h, c, _ = _cell(layer, x_t, h_prev, c_prev)
    return h, c


def _cell(layer, x_t, h_prev, c_prev):
    n = layer.units
    z = x_t @ layer.W.T + h_prev @ layer.U.T + layer.b
    acts = np.empty_like(z)
    acts[..., :2 * n] = sigmoid(z[..., :2 * n])
    acts[..., 2 * n:3 * n] = np.tanh(z[..., 2 * n:3 * n])
    acts[..., 3 * n:] = sigmoid(z[..., 3 * n:])
    i, f, g, o = acts[..., :n], acts[..., n:2 * n], acts[..., 2 * n:3 * n], acts[..., 3 * n:]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, acts


def _lstm_forward(layer: LstmLayerParams, X: np.ndarray):
    B, T, _ = X.shape
    n = layer.units
    H = np.empty((B, T, n))
    C = np.empty((B, T, n))
    A = np.empty((B, T, 4 * n))
    h = np.zeros((B, n))
    c = np.zeros((B, n))
    for t in range(T):
        h, c, A[:, t] = _cell(layer, X[:, t], h, c)
        H[:, t] = h
        C[:, t] = c
    return H, {"X": X, "H": H, "C": C, "A": A}


def _lstm_backward(layer: LstmLayerParams, cache: dict, dH: np.ndarray):
    """Backpropagate ``dH`` (gradient w.r.t. every emitted hidden state) through time."""
    X, H, C, A = cache["X"], cache["H"], cache["C"], cache["A"]
    B, T, _ = X.shape
    n = layer.units
    dW = np.zeros_like(layer.W)
    dU = np.zeros_like(layer.U)
    db = np.zeros_like(layer.b)
    dX = np.empty_like(X)
    dh_next = np.zeros((B, n))
    dc_next = np.zeros((B, n))
    dz = np.empty((B, 4 * n))
    for t in reversed(range(T)):
        i, f, g, o = (A[:, t, k * n:(k + 1) * n] for k in range(4))
        c_prev = C[:, t - 1] if t > 0 else np.zeros((B, n))
        h_prev = H[:, t - 1] if t > 0 else np.zeros((B, n))
        tc = np.tanh(C[:, t])
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz[:, :n] = dc * g * i * (1.0 - i)
        dz[:, n:2 * n] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * n:3 * n] = dc * i * (1.0 - g * g)
        dz[:, 3 * n:] = dh * tc * o * (1.0 - o)
        dW += dz.T @ X[:, t]
        dU += dz.T @ h_prev
        db += dz.sum(axis=0)
        dX[:, t] = dz @ layer.W
        dh_next = dz @ layer.U
        dc_next = dc * f
    return dX, dW, dU, db


@dataclass(eq=False)
class ForwardCache:
    """Activations recorded by :func:`forward_batch` for use by :func:`backward`."""

    shapes: dict
    lstm: list
    masks: list
    last: np.ndarray
    dense_pre: np.ndarray
    dense_out: np.ndarray
    pred: np.ndarray
    single: bool = False


def _dropout_mask(rng: np.random.Generator, shape, rate: float) -> Optional[np.ndarray]:
    if rate <= 0:
        return None
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def _check_input(params: ModelParams, X: np.ndarray) -> None:
    cfg = params.config
    if X.ndim != 3 or X.shape[1:] != (cfg.lookback, cfg.feature_count):
        raise ShapeMismatch(
            f"expected windows of shape (*, {cfg.lookback}, {cfg.feature_count}), got {X.shape}"
        )


def forward_batch(
    params: ModelParams,
    X: np.ndarray,
    mode: Mode = "infer",
    rng: Optional[np.random.Generator] = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Predict a batch of windows; returns predictions of shape (batch,) and the cache."""
    X = np.asarray(X, dtype=np.float64)
    _check_input(params, X)
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    rate = params.config.dropout_rate if mode == "train" else 0.0
    if rate > 0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")

    lstm_caches = []
    masks = []
    seq = X
    n_layers = len(params.lstm_layers)
    for k, layer in enumerate(params.lstm_layers):
        H, cache = _lstm_forward(layer, seq)
        lstm_caches.append(cache)
        out = H if k < n_layers - 1 else H[:, -1]
        mask = _dropout_mask(rng, out.shape, rate) if rate > 0 else None
        masks.append(mask)
        seq = out if mask is None else out * mask
    last = seq
    hd = params.hidden_dense
    dense_pre = last @ hd.W.T + hd.b
    dense_out = np.maximum(dense_pre, 0.0)
    od = params.output_dense
    pred = sigmoid(dense_out @ od.W.T + od.b)[:, 0]
    shapes = {k: v.shape for k, v in params.tensors().items()}
    cache = ForwardCache(shapes, lstm_caches, masks, last, dense_pre, dense_out, pred)
    return pred, cache


def forward(
    params: ModelParams,
    window: np.ndarray,
    mode: Mode = "infer",
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, ForwardCache]:
    """Single-window forward pass; ``window`` has shape (lookback, feature_count)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D window, got shape {window.shape}")
    pred, cache = forward_batch(params, window[None], mode, rng)
    cache.single = True
    return float(pred[0]), cache


def huber_loss(pred, target, delta: float = 1.0):
    """Elementwise Huber loss of ``pred - target``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    e = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64))
    out = np.where(e <= delta, 0.5 * e * e, delta * (e - 0.5 * delta))
    return float(out) if out.ndim == 0 else out


def huber_grad(pred, target, delta: float = 1.0) -> np.ndarray:
    """Derivative of :func:`huber_loss` with respect to ``pred``."""
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return np.clip(e, -delta, delta)


def backward(params: ModelParams, cache: ForwardCache, target) -> dict[str, np.ndarray]:
    """Gradients of the mean Huber loss over the cached batch, keyed like ``params.tensors()``."""
    shapes = {k: v.shape for k, v in params.tensors().items()}
    if shapes != cache.shapes or len(cache.lstm) != len(params.lstm_layers):
        raise StaleCache("cache was produced with differently shaped parameters")
    B = cache.pred.shape[0]
    target = np.broadcast_to(np.asarray(target, dtype=np.float64), (B,)) if np.ndim(target) == 0 \
        else np.asarray(target, dtype=np.float64)
    if target.shape != (B,):
        raise StaleCache(f"target shape {target.shape} does not match cached batch of {B}")
    if cache.lstm[0]["X"].shape[1] != params.config.lookback:
        raise StaleCache("cache step count differs from config lookback")

    grads: dict[str, np.ndarray] = {}
    y = cache.pred
    da2 = huber_grad(y, target, params.config.huber_delta) / B * y * (1.0 - y)
    od = params.output_dense
    grads["out.W"] = da2[None, :] @ cache.dense_out
    grads["out.b"] = np.array([da2.sum()])
    da1 = (da2[:, None] @ od.W) * (cache.dense_pre > 0)
    hd = params.hidden_dense
    grads["dense.W"] = da1.T @ cache.last
    grads["dense.b"] = da1.sum(axis=0)
    d_last = da1 @ hd.W

    n_layers = len(params.lstm_layers)
    upstream = None
    for k in reversed(range(n_layers)):
        layer = params.lstm_layers[k]
        lc = cache.lstm[k]
        mask = cache.masks[k]
        if k == n_layers - 1:
            d_out = d_last if mask is None else d_last * mask
            dH = np.zeros_like(lc["H"])
            dH[:, -1] = d_out
        else:
            dH = upstream if mask is None else upstream * mask
        upstream, dW, dU, db = _lstm_backward(layer, lc, dH)
        grads[f"lstm{k}.W"] = dW
        grads[f"lstm{k}.U"] = dU
        grads[f"lstm{k}.b"] = db
    return {name: grads[name] for name in shapes}
