"""Versioned JSON documents for fitted models.

Floats are written as ``repr`` strings so a load reproduces every bit.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import SchemaError
from .arima import ArimaFit
from .base import FittedModel
from .forest import Forest, Tree
from .spec import ForecasterSpec

FORMAT = "bugcast-model"
VERSION = 1


def _enc(arr) -> dict:
    arr = np.asarray(arr)
    if arr.dtype.kind in "iu":
        data = [int(v) for v in arr.reshape(-1)]
        dtype = "int64"
    else:
        data = [repr(float(v)) for v in arr.reshape(-1)]
        dtype = "float64"
    return {"shape": list(arr.shape), "dtype": dtype, "data": data}


def _dec(obj) -> np.ndarray:
    if obj["dtype"] == "int64":
        arr = np.array(obj["data"], dtype=np.int64)
    else:
        arr = np.array([float(v) for v in obj["data"]], dtype=float)
    return arr.reshape(obj["shape"])


def _state_to_dict(family, state):
    if state is None:
        return None
    if family == "ARIMA":
        return {
            "intercept": repr(state.intercept),
            "ar": _enc(state.ar),
            "beta": _enc(state.beta),
            "sigma2": repr(state.sigma2),
            "stderr": _enc(state.stderr),
        }
    if family == "RF":
        return {
            "target_min": repr(state.target_min),
            "target_max": repr(state.target_max),
            "trees": [
                {k: _enc(getattr(t, k)) for k in ("feature", "threshold", "left", "right", "value")}
                for t in state.trees
            ],
        }
    if family == "LSTM":
        return {k: _enc(v) for k, v in sorted(state.items())}
    raise SchemaError(f"cannot serialise state of family {family}")


def _state_from_dict(family, data):
    if data is None:
        return None
    if family == "ARIMA":
        return ArimaFit(
            float(data["intercept"]), _dec(data["ar"]), _dec(data["beta"]), float(data["sigma2"]), _dec(data["stderr"])
        )
    if family == "RF":
        trees = tuple(
            Tree(*(_dec(t[k]) for k in ("feature", "threshold", "left", "right", "value"))) for t in data["trees"]
        )
        return Forest(trees, float(data["target_min"]), float(data["target_max"]))
    if family == "LSTM":
        return {k: _dec(v) for k, v in data.items()}
    raise SchemaError(f"unknown family {family}")


def model_to_dict(model: FittedModel) -> dict:
    fam = model.spec.family
    return {
        "format": FORMAT,
        "version": VERSION,
        "spec": model.spec.to_dict(),
        "state": _state_to_dict(fam, model.state),
        "history": _enc(model.history),
        "history_exog": None if model.history_exog is None else _enc(model.history_exog),
    }


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("format") != FORMAT:
        raise SchemaError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise SchemaError(f"unsupported model document version {doc.get('version')}")
    spec = ForecasterSpec.from_dict(doc["spec"])
    ex = doc.get("history_exog")
    return FittedModel(
        spec,
        _state_from_dict(spec.family, doc["state"]),
        _dec(doc["history"]),
        None if ex is None else _dec(ex),
    )


def dumps_model(model: FittedModel) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def loads_model(text: str) -> FittedModel:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
