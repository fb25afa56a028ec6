"""Mini-batch SGD with exponential learning-rate decay and input dropout.

The loop in :func:`fit_sgd` is shared with the feed-forward baseline.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from ..dataset import SequenceSet, class_index
from ..errors import DimensionMismatch, DivergedLoss
from ..eval.metrics import confusion
from .bptt import bptt
from .model import cross_entropy, decide, glorot_init, penalty, predict_proba

SHUFFLE_STREAM, DROPOUT_STREAM = 100, 101


@dataclass
class TrainConfig:
    T: int = 10
    epochs: int = 1000
    batch_size: int = 500
    lr0: float = 1e-2
    lr_decay: float = 0.995
    l2: float = 0.01
    dropout_keep: float = 1.0
    seed: int = 0
    hidden: int = 20
    freeze_recurrent: bool = False

    def __post_init__(self):
        if self.T < 1 or self.epochs < 0 or self.batch_size < 1 or self.hidden < 1:
            raise ValueError("T, batch_size and hidden must be positive, epochs non-negative")
        if self.lr0 <= 0 or self.lr_decay <= 0 or self.l2 < 0:
            raise ValueError("lr0 and lr_decay must be positive, l2 non-negative")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError("dropout_keep must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "f1_down", "f1_stat", "f1_up", "lr")


@dataclass
class TrainHistory:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    f1_down: list = field(default_factory=list)
    f1_stat: list = field(default_factory=list)
    f1_up: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    best_epoch: Optional[int] = None

    def __len__(self):
        return len(self.epoch)

    def append(self, **row):
        for k in HISTORY_COLUMNS:
            getattr(self, k).append(row[k])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(HISTORY_COLUMNS) + "\n")
        for i in range(len(self)):
            out.write(",".join(repr(getattr(self, k)[i]) for k in HISTORY_COLUMNS) + "\n")
        return out.getvalue()


def _arrays(ds):
    if ds is None:
        return None, None
    if isinstance(ds, SequenceSet):
        return ds.x, ds.y
    X, y = ds
    return np.asarray(X, dtype=np.float64), np.asarray(y)


def evaluate_loss(model, X, y, l2: float, proba: Callable) -> tuple[float, np.ndarray]:
    probs = proba(model, X)
    Y = np.zeros_like(probs)
    Y[np.arange(len(y)), class_index(y)] = 1.0
    return float(np.mean(cross_entropy(probs, Y))) + penalty(model, l2), probs


def fit_sgd(
    model,
    train,
    val,
    config: TrainConfig,
    grad_fn: Callable,
    proba: Callable,
    frozen: tuple = (),
):
    """Generic SGD driver.

    ``grad_fn(model, X, y, mask, keep, l2) -> (loss, grads)`` and
    ``proba(model, X) -> probs``. Returns the snapshot with the lowest
    validation loss (the last one when no validation data is given) and the
    per-epoch history.
    """
    X, y = _arrays(train)
    Xv, yv = _arrays(val)
    history = TrainHistory()
    if config.epochs == 0:
        return model, history
    if len(X) == 0:
        raise ValueError("empty training set")

    shuffle_rng = np.random.default_rng([config.seed, SHUFFLE_STREAM])
    dropout_rng = np.random.default_rng([config.seed, DROPOUT_STREAM])
    keep = config.dropout_keep
    n = len(X)
    best, best_loss = model.copy(), math.inf
    params = model.params()

    for epoch in range(config.epochs):
        lr = config.lr0 * config.lr_decay**epoch
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb = X[idx]
            mask = None
            if keep < 1.0:
                shape = (len(idx), 1, Xb.shape[2]) if Xb.ndim == 3 else Xb.shape
                mask = (dropout_rng.random(shape) < keep).astype(np.float64)
            value, grads = grad_fn(model, Xb, y[idx], mask, keep, config.l2)
            if not math.isfinite(value):
                raise DivergedLoss(f"non-finite training loss at epoch {epoch}", history)
            for name, g in grads.items():
                if name not in frozen:
                    params[name] -= lr * g
            total += value * len(idx)
        train_loss = total / n

        if Xv is not None and len(Xv):
            val_loss, probs = evaluate_loss(model, Xv, yv, config.l2, proba)
            f1 = confusion(decide(probs), yv).f1
        else:
            val_loss, f1 = math.nan, [math.nan] * 3
        if not math.isfinite(train_loss):
            raise DivergedLoss(f"non-finite training loss at epoch {epoch}", history)
        history.append(
            epoch=epoch, train_loss=train_loss, val_loss=val_loss,
            f1_down=float(f1[0]), f1_stat=float(f1[1]), f1_up=float(f1[2]), lr=lr,
        )
        score = val_loss if math.isfinite(val_loss) else -epoch
        if score < best_loss:
            best_loss, best = score, model.copy()
            history.best_epoch = epoch
    return best, history


def _rnn_grad(model, X, y, mask, keep, l2):
    return bptt(model, X, y, mask, keep, l2)


def train(train_set, val_set, config: TrainConfig, model=None):
    """Fit an Elman RNN; returns ``(best_model, history)``."""
    X, _ = _arrays(train_set)
    if X.ndim != 3:
        raise DimensionMismatch(f"expected (N, T, P) training input, got shape {X.shape}")
    if X.shape[1] != config.T:
        raise DimensionMismatch(f"sequence length {X.shape[1]} != config.T {config.T}")
    if model is None:
        model = glorot_init(X.shape[2], config.hidden, 3, config.seed)
    elif model.W_h.shape[1] != X.shape[2]:
        raise DimensionMismatch(f"model expects P={model.W_h.shape[1]}, data has {X.shape[2]}")
    if val_set is not None:
        Xv, _ = _arrays(val_set)
        if len(Xv) and Xv.shape[1:] != X.shape[1:]:
            raise DimensionMismatch("validation and training shapes differ")
    frozen = ("U_h",) if config.freeze_recurrent else ()
    if config.freeze_recurrent:
        model.U_h[...] = 0.0
    model.meta.update(seed=config.seed, train_config=config.to_dict())
    return fit_sgd(model, train_set, val_set, config, _rnn_grad, predict_proba, frozen)
