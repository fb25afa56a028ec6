"""Model specifications and the fit/score path shared by the CLI and studies.

Standardization is fitted on the current-observation rows of the balanced
training set and stored in the model's metadata, so a saved model scores
raw feature rows on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .baselines import (
    OVR_THRESHOLD,
    LogisticConfig,
    WhiteNoise,
    ffwd_config,
    train_ffwd,
    train_ovr_logistic,
)
from .dataset import SequenceSet
from .errors import InvalidConfig
from .features import apply_standardization, standardize
from .rnn.model import decide
from .rnn.training import TrainConfig, train

MODEL_KINDS = ("rnn", "ffwd", "logistic", "white")


@dataclass
class ModelSpec:
    """What to fit: a model kind plus its training settings.

    ``train`` drives the RNN and the feed-forward net (whose defaults differ,
    see :meth:`default`); ``logistic`` drives the elastic-net baseline.
    """

    kind: str = "rnn"
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden_layers: tuple = (200, 100)
    logistic: LogisticConfig = field(default_factory=LogisticConfig)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidConfig(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        self.hidden_layers = tuple(int(h) for h in self.hidden_layers)

    @classmethod
    def default(cls, kind: str = "rnn", **train_overrides) -> "ModelSpec":
        tc = ffwd_config(**train_overrides) if kind == "ffwd" else TrainConfig(**train_overrides)
        return cls(kind=kind, train=tc)

    @property
    def T(self) -> int:
        return self.train.T

    @property
    def seed(self) -> int:
        return self.train.seed

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, train=replace(self.train, seed=seed), logistic=replace(self.logistic, seed=seed))

    def with_T(self, T: int) -> "ModelSpec":
        return replace(self, train=replace(self.train, T=T))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "train": self.train.to_dict(),
            "hidden_layers": list(self.hidden_layers),
            "logistic": self.logistic.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidConfig(f"unknown model settings: {sorted(unknown)}")
        kind = doc.get("kind", "rnn")
        try:
            tc = (ffwd_config if kind == "ffwd" else TrainConfig)(**doc.get("train", {}))
            lc = LogisticConfig(**doc.get("logistic", {}))
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc
        return cls(kind, tc, tuple(doc.get("hidden_layers", (200, 100))), lc)


def standardization_of(model) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    st = model.meta.get("standardization")
    if not st:
        return None, None
    return np.asarray(st["shift"], dtype=np.float64), np.asarray(st["scale"], dtype=np.float64)


def standardized(model, samples: SequenceSet) -> SequenceSet:
    shift, scale = standardization_of(model)
    if shift is None:
        return samples
    return samples.with_base(apply_standardization(samples.base, shift, scale))


def fit(spec: ModelSpec, train_set: SequenceSet, val_set: Optional[SequenceSet] = None):
    """Fit ``spec`` on raw (unstandardized) samples; returns ``(model, history)``.

    ``history`` is ``None`` for kinds without an epoch loop.
    """
    if spec.kind == "white":
        model = WhiteNoise(spec.seed)
        model.meta.update(seed=spec.seed, T=train_set.T)
        return model, None
    shift, scale = standardize(train_set.base[train_set.end])
    tr = train_set.with_base(apply_standardization(train_set.base, shift, scale))
    va = None if val_set is None else val_set.with_base(apply_standardization(val_set.base, shift, scale))
    history = None
    if spec.kind == "rnn":
        model, history = train(tr, va, replace(spec.train, T=train_set.T))
    elif spec.kind == "ffwd":
        model, history = train_ffwd(tr, va, replace(spec.train, T=train_set.T), spec.hidden_layers)
    else:
        model = train_ovr_logistic(tr, va, seed=spec.seed, config=spec.logistic)
    model.meta["standardization"] = {"shift": shift.tolist(), "scale": scale.tolist()}
    model.meta["T"] = train_set.T
    return model, history


def score(model, samples: SequenceSet) -> np.ndarray:
    """Class probabilities (N, 3) for raw samples."""
    if model.model_kind == "white":
        return model.predict_proba(np.empty((len(samples), 0)))
    ds = standardized(model, samples)
    return model.predict_proba(ds.x)


def decisions(model, probs: np.ndarray) -> np.ndarray:
    """Labels from probabilities: argmax, or one-vs-rest 0.5 cut-points for the logistic baseline."""
    if model.model_kind == "logistic":
        return decide(probs, (OVR_THRESHOLD,) * 3)
    return decide(probs)
