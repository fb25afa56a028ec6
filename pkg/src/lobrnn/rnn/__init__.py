"""Elman recurrent classifier: init, forward, BPTT, SGD training, I/O."""

from .bptt import batch_loss, bptt
from .model import (
    RnnModel,
    decide,
    forward,
    forward_batch,
    glorot_init,
    loss,
    predict,
    predict_proba,
    softmax,
)
from .training import TrainConfig, TrainHistory, train

__all__ = [
    "RnnModel", "TrainConfig", "TrainHistory", "batch_loss", "bptt", "decide", "forward",
    "forward_batch", "glorot_init", "loss", "predict", "predict_proba", "softmax", "train",
]
