"""JSON model files and atomic writes.

Floats go through ``json``'s shortest round-trip repr, so loading a saved
model reproduces every parameter bit for bit.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .game import DEFAULT_BIG_M, ValidationError
from .npl import NplModel
from .parametric import GeneralizedSuqrModel, StandardSuqrModel


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model) -> dict:
    if isinstance(model, GeneralizedSuqrModel):
        return {"type": "gsuqr", "w1": model.w1, "c": _floats(model.c), "M": model.M}
    if isinstance(model, StandardSuqrModel):
        return {"type": "ssuqr", "w1": model.w1, "w2": model.w2, "w3": model.w3,
                "M": DEFAULT_BIG_M}
    if isinstance(model, NplModel):
        return {"type": "npl", "khat": float(model.khat), "M": float(model.M),
                "clamp": bool(model.clamp), "anchors": _floats(model.anchors),
                "values": _floats(model.values.T), "kstar": _floats(model.lipschitz)}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    try:
        kind = d["type"]
        if kind == "gsuqr":
            return GeneralizedSuqrModel(d["w1"], d["c"], d.get("M", DEFAULT_BIG_M))
        if kind == "ssuqr":
            return StandardSuqrModel(d["w1"], d["w2"], d["w3"])
        if kind == "npl":
            anchors = np.asarray(d["anchors"], dtype=float)
            values = np.asarray(d["values"], dtype=float).reshape(anchors.shape[0], -1).T
            return NplModel(anchors, values, d["kstar"], d["khat"], d["M"], d.get("clamp", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model: {exc}") from exc
    raise ValidationError(f"unknown model type {kind!r}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model, path) -> None:
    atomic_write_text(path, dumps(model_to_dict(model)))


def load_model(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(d)
