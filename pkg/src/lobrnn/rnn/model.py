"""Elman network parameters, initialisation, forward pass and decisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ..dataset import CLASSES, Label
from ..errors import NonFiniteInput

FORMAT_VERSION = 1
LOG_EPS = 1e-12

# Independent RNG stream per weight role so that architectures sharing a
# layer (e.g. an RNN with U_h = 0 and a one-hidden-layer net) draw it equally.
ROLE_INPUT, ROLE_OUTPUT, ROLE_RECURRENT = 0, 1, 2


def layer_rng(seed: int, role: int) -> np.random.Generator:
    return np.random.default_rng([seed, role])


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


@dataclass
class RnnModel:
    W_h: np.ndarray  # (H, P)
    U_h: np.ndarray  # (H, H)
    b_h: np.ndarray  # (H,)
    W_y: np.ndarray  # (K, H)
    b_y: np.ndarray  # (K,)
    format_version: int = FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    model_kind = "rnn"
    param_names = ("W_h", "U_h", "b_h", "W_y", "b_y")
    penalized = ("W_h", "U_h", "W_y")

    def __post_init__(self):
        H, P = self.W_h.shape
        K = self.W_y.shape[0]
        if self.U_h.shape != (H, H) or self.b_h.shape != (H,) or self.W_y.shape != (K, H) or self.b_y.shape != (K,):
            raise ValueError("inconsistent RNN parameter shapes")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(P, H, K)."""
        return self.W_h.shape[1], self.W_h.shape[0], self.W_y.shape[0]

    def params(self) -> dict:
        return {n: getattr(self, n) for n in self.param_names}

    def copy(self) -> "RnnModel":
        return RnnModel(*(getattr(self, n).copy() for n in self.param_names), self.format_version, dict(self.meta))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params().values())

    def predict_proba(self, x) -> np.ndarray:
        return predict_proba(self, x)

    def predict(self, x, thresholds=None):
        return predict(self, x, thresholds)


def glorot_init(P: int = 32, H: int = 20, K: int = 3, seed: int = 0) -> RnnModel:
    """Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases."""
    if min(P, H, K) < 1:
        raise ValueError("dimensions must be positive")
    return RnnModel(
        W_h=glorot_uniform(layer_rng(seed, ROLE_INPUT), H, P),
        U_h=glorot_uniform(layer_rng(seed, ROLE_RECURRENT), H, H),
        b_h=np.zeros(H),
        W_y=glorot_uniform(layer_rng(seed, ROLE_OUTPUT), K, H),
        b_y=np.zeros(K),
        meta={"seed": seed},
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: RnnModel, x, mask=None, keep: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Run one sequence ``x`` of shape (T, P) from a zero hidden state.

    ``mask`` is a 0/1 array broadcastable to ``x``; masked inputs are scaled
    by ``1 / keep`` (inverted dropout). Returns hidden states (T, H) and the
    class probabilities (K,).
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input sequence contains non-finite values")
    if mask is not None:
        x = x * mask / keep
    T = x.shape[0]
    H = model.W_h.shape[0]
    a = x @ model.W_h.T
    hs = np.empty((T, H))
    h = np.zeros(H)
    for t in range(T):
        h = np.maximum(a[t] + model.U_h @ h + model.b_h, 0.0)
        hs[t] = h
    return hs, softmax(model.W_y @ h + model.b_y)


def forward_batch(model: RnnModel, X: np.ndarray, mask=None, keep: float = 1.0):
    """Batched forward over X of shape (N, T, P).

    Returns ``(Xt, Z, Hs, probs)`` where ``Xt`` is the (dropped-out) input,
    ``Z`` the pre-activations and ``Hs`` the hidden states, each (N, T, .).
    """
    if mask is not None:
        X = X * mask / keep
    N, T, _ = X.shape
    H = model.W_h.shape[0]
    A = X @ model.W_h.T
    Z = np.empty((N, T, H))
    Hs = np.empty((N, T, H))
    h = np.zeros((N, H))
    for t in range(T):
        z = A[:, t] + h @ model.U_h.T + model.b_h
        Z[:, t] = z
        h = np.maximum(z, 0.0)
        Hs[:, t] = h
    probs = softmax(h @ model.W_y.T + model.b_y)
    return X, Z, Hs, probs


def penalty(model, l2: float) -> float:
    """``l2 / 2`` times the squared Frobenius norm of the weight matrices."""
    return 0.5 * l2 * sum(float(np.sum(getattr(model, n) ** 2)) for n in model.penalized)


def cross_entropy(probs, y_onehot) -> np.ndarray:
    return -np.sum(np.asarray(y_onehot) * np.log(np.maximum(probs, LOG_EPS)), axis=-1)


def loss(probs, y, model, l2: float) -> float:
    """Cross-entropy of one prediction plus the L2 weight penalty."""
    return float(cross_entropy(probs, y)) + penalty(model, l2)


def predict_proba(model: RnnModel, x, chunk: int = 8192) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return forward(model, x)[1]
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains non-finite values")
    out = [forward_batch(model, x[i : i + chunk])[3] for i in range(0, len(x), chunk)]
    return np.concatenate(out) if out else np.empty((0, model.W_y.shape[0]))


Thresholds = Union[Mapping, Sequence[Optional[float]], None]


def _threshold_vector(thresholds: Thresholds) -> np.ndarray:
    vec = np.full(len(CLASSES), np.inf)
    if isinstance(thresholds, Mapping):
        for label, thr in thresholds.items():
            vec[int(label) + 1] = thr
    else:
        for i, thr in enumerate(thresholds):
            if thr is not None:
                vec[i] = thr
    return vec


def decide(probs, thresholds: Thresholds = None):
    """Turn class probabilities into labels.

    Without thresholds: argmax, ties broken toward Stationary, then toward
    the lower class index. With thresholds (one-vs-rest), class k is a
    candidate iff ``probs[k] >= thresholds[k]``; no candidate means
    Stationary, several mean the most probable one.
    """
    p = np.asarray(probs, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if thresholds is None:
        cand = p == p.max(axis=1, keepdims=True)
    else:
        cand = p >= _threshold_vector(thresholds)
        cand &= p == np.where(cand, p, -np.inf).max(axis=1, keepdims=True)
    idx = np.where(cand[:, 1], 1, np.argmax(cand, axis=1))
    idx = np.where(cand.any(axis=1), idx, 1)
    labels = idx - 1
    return Label(int(labels[0])) if single else labels


def predict(model, x, thresholds: Thresholds = None):
    return decide(predict_proba(model, x), thresholds)
