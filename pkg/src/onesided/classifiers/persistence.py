"""JSON model files.

Every file is a single JSON object::

    {"format": "onesided-model", "version": 1, "kind": "oknn",
     "params": {...}, "payload": {...}}

Floats are written with ``repr`` precision, so a saved model reloads to
bit-identical arrays.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import PersistenceError
from .knn import Knn2Model, Knn2Params
from .oknn import OkNNModel, OkNNParams
from .svm import SvmModel, SvmParams

FORMAT_TAG = "onesided-model"
FORMAT_VERSION = 1


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def model_to_dict(model) -> dict:
    if isinstance(model, OkNNModel):
        kind = "oknn"
        payload = {"targets": model.targets.tolist(),
                   "d2_per_target": model.d2_per_target.tolist()}
    elif isinstance(model, Knn2Model):
        kind = "knn2"
        payload = {"spectra": model.spectra.tolist(),
                   "is_target": [bool(t) for t in model.is_target]}
    elif isinstance(model, SvmModel):
        kind = "svm"
        payload = {"weights": model.weights.tolist(), "bias": model.bias,
                   "support_alphas": [[i, a] for i, a in model.support_alphas],
                   "n_iter": model.n_iter, "converged": model.converged}
    else:
        raise PersistenceError(f"cannot serialize object of type {type(model).__name__}")
    return {"format": FORMAT_TAG, "version": FORMAT_VERSION, "kind": kind,
            "params": model.params.to_dict(), "payload": payload}


def model_from_dict(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise PersistenceError("not a onesided model document")
    if doc.get("version") != FORMAT_VERSION:
        raise PersistenceError(
            f"unsupported model format version {doc.get('version')!r} "
            f"(this build reads version {FORMAT_VERSION})")
    kind = doc.get("kind")
    try:
        params, payload = doc["params"], doc["payload"]
        if kind == "oknn":
            targets = _readonly(payload["targets"])
            d2 = _readonly(payload["d2_per_target"])
            if targets.ndim != 2 or d2.shape != (targets.shape[0],):
                raise PersistenceError("OkNN payload arrays have inconsistent shapes")
            return OkNNModel(OkNNParams(**params), targets, d2)
        if kind == "knn2":
            is_target = np.array(payload["is_target"], dtype=bool)
            is_target.setflags(write=False)
            return Knn2Model(Knn2Params(**params), _readonly(payload["spectra"]), is_target)
        if kind == "svm":
            return SvmModel(
                SvmParams(**params),
                _readonly(payload["weights"]),
                float(payload["bias"]),
                tuple((int(i), float(a)) for i, a in payload["support_alphas"]),
                int(payload.get("n_iter", 0)),
                bool(payload.get("converged", True)),
            )
    except PersistenceError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PersistenceError(f"corrupted {kind} model payload: {exc}") from None
    raise PersistenceError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    text = json.dumps(model_to_dict(model), indent=1)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"cannot write model to {path}: {exc}") from None


def load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"cannot read model from {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"{path}: corrupted model file ({exc})") from None
    return model_from_dict(doc)
