"""Backpropagation through time for the Elman classifier."""

from __future__ import annotations

import numpy as np

from ..dataset import class_index
from .model import RnnModel, cross_entropy, forward_batch, penalty


def bptt(model: RnnModel, X, y, mask=None, keep: float = 1.0, l2: float = 0.0):
    """Gradient of the mean batch loss.

    ``X`` is (N, T, P), ``y`` holds labels in {-1, 0, 1}. Returns
    ``(loss, grads)`` with ``grads`` keyed like ``model.params()``. The ReLU
    subgradient at exactly zero is taken as zero.
    """
    X = np.asarray(X, dtype=np.float64)
    N, T, P = X.shape
    H = model.W_h.shape[0]
    Xt, Z, Hs, probs = forward_batch(model, X, mask, keep)
    Y = np.zeros_like(probs)
    Y[np.arange(N), class_index(y)] = 1.0
    value = float(np.mean(cross_entropy(probs, Y))) + penalty(model, l2)

    dlogits = (probs - Y) / N
    hT = Hs[:, -1]
    grads = {
        "W_y": dlogits.T @ hT + l2 * model.W_y,
        "b_y": dlogits.sum(axis=0),
    }
    dZ = np.empty((N, T, H))
    dh = dlogits @ model.W_y
    for t in range(T - 1, -1, -1):
        dz = dh * (Z[:, t] > 0.0)
        dZ[:, t] = dz
        dh = dz @ model.U_h
    grads["W_h"] = dZ.reshape(N * T, H).T @ Xt.reshape(N * T, P) + l2 * model.W_h
    if T > 1:
        dU = dZ[:, 1:].reshape(N * (T - 1), H).T @ Hs[:, :-1].reshape(N * (T - 1), H)
    else:
        dU = np.zeros((H, H))
    grads["U_h"] = dU + l2 * model.U_h
    grads["b_h"] = dZ.reshape(N * T, H).sum(axis=0)
    return value, grads


def batch_loss(model: RnnModel, X, y, mask=None, keep: float = 1.0, l2: float = 0.0) -> float:
    """Mean batch objective, without gradients (used by the gradient checks)."""
    _, _, _, probs = forward_batch(model, np.asarray(X, dtype=np.float64), mask, keep)
    Y = np.zeros_like(probs)
    Y[np.arange(len(probs)), class_index(y)] = 1.0
    return float(np.mean(cross_entropy(probs, Y))) + penalty(model, l2)
