"""Versioned JSON model files shared by every model kind.

Layout::

    {
      "format": "lobrnn-model",
      "format_version": 1,
      "model_kind": "rnn" | "ffwd" | "logistic" | "white",
      "layout_hash": "<feature layout hash>",
      "params": {"W_h": {"shape": [20, 32], "data": [...]}, ...},
      "hyper": {...},            # kind-specific scalars (alpha, lam, seed)
      "meta": {...}              # seed, train_config, standardization, T
    }

Floats are written with Python's shortest round-trip representation, so
``loads(dumps(m))`` reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .baselines import FfwdNet, OvrLogistic, WhiteNoise
from .errors import LayoutHashMismatch, ModelFormatError, VersionMismatch
from .features import LAYOUT_HASH
from .rnn.model import FORMAT_VERSION, RnnModel

FORMAT_TAG = "lobrnn-model"
MODEL_KINDS = ("rnn", "ffwd", "logistic", "white")


def _encode(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _decode(doc: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in doc["shape"])
        data = np.array(doc["data"], dtype=np.float64)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad parameter block {name!r}: {exc}") from exc


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def to_document(model, layout_hash: str = LAYOUT_HASH) -> dict:
    kind = model.model_kind
    hyper: dict = {}
    if kind == "rnn":
        params = {n: _encode(p) for n, p in model.params().items()}
    elif kind == "ffwd":
        params = {n: _encode(p) for n, p in model.params().items()}
        hyper["n_layers"] = len(model.weights)
    elif kind == "logistic":
        params = {"W": _encode(model.W), "b": _encode(model.b)}
        hyper.update(alpha=float(model.alpha), lam=float(model.lam))
    elif kind == "white":
        params = {}
        hyper["seed"] = int(model.seed)
    else:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    return {
        "format": FORMAT_TAG,
        "format_version": int(model.format_version),
        "model_kind": kind,
        "layout_hash": layout_hash,
        "params": params,
        "hyper": hyper,
        "meta": _jsonable(model.meta),
    }


def dumps(model, layout_hash: str = LAYOUT_HASH) -> str:
    return json.dumps(to_document(model, layout_hash), sort_keys=True, indent=1) + "\n"


def from_document(doc: dict, expected_layout_hash: Optional[str] = LAYOUT_HASH):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise ModelFormatError("not a model file")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version!r}, expected {FORMAT_VERSION}")
    if expected_layout_hash is not None and doc.get("layout_hash") != expected_layout_hash:
        raise LayoutHashMismatch(
            f"model layout hash {doc.get('layout_hash')!r} != expected {expected_layout_hash!r}"
        )
    kind = doc.get("model_kind")
    try:
        params = {n: _decode(b, n) for n, b in doc["params"].items()}
        hyper = doc["hyper"]
        meta = dict(doc["meta"])
    except (KeyError, AttributeError, TypeError) as exc:
        raise ModelFormatError(f"incomplete model file: {exc}") from exc
    try:
        if kind == "rnn":
            return RnnModel(*(params[n] for n in RnnModel.param_names), version, meta)
        if kind == "ffwd":
            n = int(hyper["n_layers"])
            return FfwdNet([params[f"W{i}"] for i in range(n)], [params[f"b{i}"] for i in range(n)], version, meta)
        if kind == "logistic":
            return OvrLogistic(params["W"], params["b"], float(hyper["alpha"]), float(hyper["lam"]), version, meta)
        if kind == "white":
            return WhiteNoise(int(hyper["seed"]), version, meta)
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"incomplete {kind} model: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def loads(text: str, expected_layout_hash: Optional[str] = LAYOUT_HASH):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"unparseable model file: {exc}") from exc
    return from_document(doc, expected_layout_hash)


def save(model, path: Union[str, Path], layout_hash: str = LAYOUT_HASH) -> None:
    Path(path).write_text(dumps(model, layout_hash))


def load(path: Union[str, Path], expected_layout_hash: Optional[str] = LAYOUT_HASH):
    return loads(Path(path).read_text(), expected_layout_hash)
