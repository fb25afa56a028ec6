"""Reference classifiers: elastic-net one-vs-rest logistic regression, a
feed-forward ReLU network over flattened lags, and a white-noise control.

All of them consume (N, T, P) windows, flattening the lag axis themselves.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dataset import CLASSES, SequenceSet, class_index
from .errors import DivergedLoss
from .rnn.model import (
    ROLE_INPUT,
    ROLE_OUTPUT,
    FORMAT_VERSION,
    decide,
    glorot_uniform,
    layer_rng,
    cross_entropy,
    penalty,
    softmax,
)
from .rnn.training import TrainConfig, fit_sgd

OVR_THRESHOLD = 0.5
PENALTY_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


def _flatten(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X.reshape(len(X), -1) if X.ndim == 3 else X


def _data(ds):
    if ds is None:
        return None, None
    if isinstance(ds, SequenceSet):
        return ds.flat(), ds.y
    X, y = ds
    return _flatten(X), np.asarray(y)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# -- elastic-net one-vs-rest logistic regression ---------------------------

@dataclass
class LogisticConfig:
    epochs: int = 50
    batch_size: int = 500
    lr0: float = 0.1
    lr_decay: float = 0.99
    alpha: float = 0.5
    lam: Optional[float] = None  # None: choose from PENALTY_GRID on validation loss
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OvrLogistic:
    W: np.ndarray  # (3, D)
    b: np.ndarray  # (3,)
    alpha: float
    lam: float
    format_version: int = FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    model_kind = "logistic"

    def params(self) -> dict:
        return {"W": self.W, "b": self.b}

    def decision_function(self, X) -> np.ndarray:
        return _flatten(X) @ self.W.T + self.b

    def predict_proba(self, X) -> np.ndarray:
        """Per-class one-vs-rest probabilities; rows need not sum to one."""
        return _sigmoid(self.decision_function(X))

    def predict(self, X, thresholds=(OVR_THRESHOLD,) * 3):
        return decide(self.predict_proba(X), thresholds)


def logistic_smooth_objective(w, b, X, y, lam: float, alpha: float) -> float:
    """Mean logistic loss plus the ridge part of the elastic-net penalty."""
    z = X @ w + b
    ll = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(ll + 0.5 * lam * (1.0 - alpha) * np.dot(w, w))


def logistic_smooth_gradient(w, b, X, y, lam: float, alpha: float):
    g = (_sigmoid(X @ w + b) - y) / len(y)
    return X.T @ g + lam * (1.0 - alpha) * w, float(g.sum())


def soft_threshold(w, t: float):
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def fit_binary_elastic_net(X, y, lam: float, alpha: float, config: LogisticConfig, rng):
    """Proximal mini-batch SGD on one binary problem; intercept unpenalised."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for epoch in range(config.epochs):
        lr = config.lr0 * config.lr_decay**epoch
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            gw, gb = logistic_smooth_gradient(w, b, X[idx], y[idx], lam, alpha)
            w = soft_threshold(w - lr * gw, lr * lam * alpha)
            b -= lr * gb
        if not (np.all(np.isfinite(w)) and math.isfinite(b)):
            raise DivergedLoss(f"elastic net diverged at epoch {epoch}")
    return w, b


def _ovr_fit(X, y, lam, alpha, config):
    W = np.zeros((len(CLASSES), X.shape[1]))
    b = np.zeros(len(CLASSES))
    for k, c in enumerate(CLASSES):
        rng = np.random.default_rng([config.seed, k])
        W[k], b[k] = fit_binary_elastic_net(X, (y == c).astype(np.float64), lam, alpha, config, rng)
    return OvrLogistic(W, b, alpha, lam, meta={"seed": config.seed, "train_config": config.to_dict()})


def _ovr_val_loss(model: OvrLogistic, X, y) -> float:
    z = model.decision_function(X)
    Y = (y[:, None] == np.array([int(c) for c in CLASSES])).astype(np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - Y * z) * len(CLASSES))


def train_ovr_logistic(train, val, penalty: Optional[tuple] = None, seed: int = 0, config: LogisticConfig | None = None):
    """Three class-vs-rest elastic-net logistic models.

    ``penalty`` is ``(lam, alpha)``. With ``lam`` unset, every value of
    ``PENALTY_GRID`` is fitted and the lowest validation log-loss wins.
    """
    config = replace(config or LogisticConfig(), seed=seed)
    if penalty is not None:
        config = replace(config, lam=penalty[0], alpha=penalty[1])
    X, y = _data(train)
    Xv, yv = _data(val)
    if config.lam is not None:
        return _ovr_fit(X, y, config.lam, config.alpha, config)
    if Xv is None or len(Xv) == 0:
        raise ValueError("penalty grid search needs validation data")
    best, best_loss, losses = None, math.inf, {}
    for lam in PENALTY_GRID:
        model = _ovr_fit(X, y, lam, config.alpha, config)
        losses[lam] = _ovr_val_loss(model, Xv, yv)
        if losses[lam] < best_loss:
            best, best_loss = model, losses[lam]
    best.meta["grid_val_loss"] = {repr(k): v for k, v in losses.items()}
    return best


# -- feed-forward network -------------------------------------------------

@dataclass
class FfwdNet:
    weights: list  # [(H1, D), (H2, H1), ..., (K, H_last)]
    biases: list
    format_version: int = FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    model_kind = "ffwd"

    @property
    def param_names(self):
        n = len(self.weights)
        return tuple(f"W{i}" for i in range(n)) + tuple(f"b{i}" for i in range(n))

    @property
    def penalized(self):
        return tuple(f"W{i}" for i in range(len(self.weights)))

    def __getattr__(self, name):
        # expose W0, b1, ... for the shared penalty/SGD helpers
        if name[:1] in ("W", "b") and name[1:].isdigit():
            seq = self.__dict__["weights"] if name[0] == "W" else self.__dict__["biases"]
            return seq[int(name[1:])]
        raise AttributeError(name)

    @property
    def dims(self):
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def params(self) -> dict:
        out = {f"W{i}": w for i, w in enumerate(self.weights)}
        out.update({f"b{i}": b for i, b in enumerate(self.biases)})
        return out

    def copy(self) -> "FfwdNet":
        return FfwdNet([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.format_version, dict(self.meta))

    def predict_proba(self, X) -> np.ndarray:
        return ffwd_forward(self, _flatten(X))[-1]

    def predict(self, X, thresholds=None):
        return decide(self.predict_proba(X), thresholds)


def _hidden_role(i: int) -> int:
    return ROLE_INPUT if i == 0 else 10 + i


def ffwd_init(n_inputs: int, hidden: Sequence[int] = (200, 100), K: int = 3, seed: int = 0) -> FfwdNet:
    sizes = [n_inputs, *hidden]
    weights = [glorot_uniform(layer_rng(seed, _hidden_role(i)), sizes[i + 1], sizes[i]) for i in range(len(hidden))]
    weights.append(glorot_uniform(layer_rng(seed, ROLE_OUTPUT), K, sizes[-1]))
    biases = [np.zeros(w.shape[0]) for w in weights]
    return FfwdNet(weights, biases, meta={"seed": seed})


def ffwd_forward(model: FfwdNet, X, mask=None, keep: float = 1.0):
    """Activations ``[input, z1, h1, z2, h2, ..., probs]``."""
    if mask is not None:
        X = X * mask / keep
    acts = [X]
    h = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = h @ W.T + b
        h = np.maximum(z, 0.0)
        acts += [z, h]
    acts.append(softmax(h @ model.weights[-1].T + model.biases[-1]))
    return acts


def ffwd_grad(model: FfwdNet, X, y, mask=None, keep: float = 1.0, l2: float = 0.0):
    """Mean batch loss and its gradient (same objective as the RNN)."""
    X = _flatten(X)
    acts = ffwd_forward(model, X, mask, keep)
    probs = acts[-1]
    N = len(X)
    Y = np.zeros_like(probs)
    Y[np.arange(N), class_index(y)] = 1.0
    value = float(np.mean(cross_entropy(probs, Y))) + penalty(model, l2)
    n_hidden = len(model.weights) - 1
    grads = {}
    delta = (probs - Y) / N
    h_prev = acts[-2] if n_hidden else acts[0]
    grads[f"W{n_hidden}"] = delta.T @ h_prev + l2 * model.weights[-1]
    grads[f"b{n_hidden}"] = delta.sum(axis=0)
    dh = delta @ model.weights[-1]
    for i in range(n_hidden - 1, -1, -1):
        z = acts[1 + 2 * i]
        inp = acts[2 * i]
        dz = dh * (z > 0.0)
        grads[f"W{i}"] = dz.T @ inp + l2 * model.weights[i]
        grads[f"b{i}"] = dz.sum(axis=0)
        dh = dz @ model.weights[i]
    return value, grads


def ffwd_config(**overrides) -> TrainConfig:
    """Training defaults for the feed-forward baseline: lr 0.01, lambda 0.1."""
    base = dict(lr0=0.01, l2=0.1)
    base.update(overrides)
    return TrainConfig(**base)


def _ffwd_proba(model, X):
    return model.predict_proba(X)


def train_ffwd(train, val, config: TrainConfig | None = None, hidden: Sequence[int] = (200, 100), model=None):
    config = config or ffwd_config()
    X, y = _data(train)
    Xv, yv = _data(val)
    if model is None:
        model = ffwd_init(X.shape[1], hidden, len(CLASSES), config.seed)
    model.meta.update(seed=config.seed, train_config=config.to_dict(), hidden=list(hidden))
    val_arrays = None if Xv is None else (Xv, yv)
    return fit_sgd(model, (X, y), val_arrays, config, ffwd_grad, _ffwd_proba)


# -- white noise ----------------------------------------------------------

def white_noise_predict(seed: int, n: int):
    """Labels and probabilities uniform on the simplex, independent of input.

    Each label is the argmax of its probability vector, so every class is
    drawn with probability 1/3.
    """
    rng = np.random.default_rng(seed)
    e = rng.standard_exponential((n, len(CLASSES)))
    probs = e / e.sum(axis=1, keepdims=True) if n else np.empty((0, len(CLASSES)))
    return decide(probs) if n else np.empty(0, dtype=np.int64), probs


@dataclass
class WhiteNoise:
    seed: int = 0
    format_version: int = FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    model_kind = "white"

    def predict_proba(self, X) -> np.ndarray:
        return white_noise_predict(self.seed, len(X))[1]

    def predict(self, X, thresholds=None):
        return decide(self.predict_proba(X), thresholds)
