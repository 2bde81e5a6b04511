"""One-sided k-nearest-neighbour classifier.

The model is trained on target spectra only. For a query ``x`` it finds
the ``m`` nearest stored targets and compares

* ``d1``: the mean distance from ``x`` to those ``m`` targets, with
* ``d2``: the mean, over the same ``m`` targets, of each one's average
  distance to its own ``k`` nearest fellow targets.

The query is accepted as a target when ``d1 / d2 <= threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, TrainingError
from .distances import Metric, pairwise_distances


@dataclass(frozen=True)
class OkNNParams:
    m: int = 1
    k: int = 1
    threshold: float = 1.0
    metric: Metric = Metric.COSINE

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "threshold", float(self.threshold))

    def to_dict(self) -> dict:
        return {"m": self.m, "k": self.k, "threshold": self.threshold,
                "metric": self.metric.value}


@dataclass(frozen=True)
class OkNNDecision:
    d1: float
    d2: float
    ratio: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class OkNNModel:
    params: OkNNParams
    targets: np.ndarray
    d2_per_target: np.ndarray

    @property
    def channel_count(self) -> int:
        return self.targets.shape[1]


def _mean_of_smallest(D: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Stable sort: equal distances resolve to the lower stored index.
    order = np.argsort(D, axis=1, kind="stable")[:, :n]
    return np.take_along_axis(D, order, axis=1).mean(axis=1), order


def oknn_fit(targets, params: OkNNParams) -> OkNNModel:
    """Store the target spectra and precompute each one's own k-NN radius."""
    T = np.array(targets, dtype=np.float64)
    if T.ndim != 2:
        raise ShapeError(f"targets must be a 2-D array, got shape {T.shape}")
    required = max(params.m, params.k) + 1
    if T.shape[0] < required:
        raise TrainingError(
            f"OkNN with m={params.m}, k={params.k} needs at least {required} targets, "
            f"got {T.shape[0]}")
    D = pairwise_distances(T, T, params.metric)
    # A target is never its own neighbour; duplicates still count at distance 0.
    np.fill_diagonal(D, np.inf)
    d2, _ = _mean_of_smallest(D, params.k)
    T.setflags(write=False)
    d2.setflags(write=False)
    return OkNNModel(params=params, targets=T, d2_per_target=d2)


def oknn_scores(model: OkNNModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(d1, d2)`` arrays for every row of `X`."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.channel_count:
        raise ShapeError(
            f"query has {X.shape[1]} channels, model expects {model.channel_count}")
    D = pairwise_distances(X, model.targets, model.params.metric)
    d1, neighbours = _mean_of_smallest(D, model.params.m)
    d2 = model.d2_per_target[neighbours].mean(axis=1)
    return d1, d2


def _decide(d1: float, d2: float, threshold: float) -> OkNNDecision:
    if d2 == 0.0:
        # Zero-radius neighbourhood: only exact members are accepted.
        ratio = 0.0 if d1 == 0.0 else math.inf
    else:
        ratio = d1 / d2
    return OkNNDecision(d1=float(d1), d2=float(d2), ratio=float(ratio),
                        accepted=bool(ratio <= threshold))


def oknn_predict(model: OkNNModel, x) -> OkNNDecision:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("oknn_predict takes a single spectrum; use oknn_predict_many")
    d1, d2 = oknn_scores(model, x[None, :])
    return _decide(d1[0], d2[0], model.params.threshold)


def oknn_predict_many(model: OkNNModel, X) -> list[OkNNDecision]:
    d1, d2 = oknn_scores(model, X)
    return [_decide(a, b, model.params.threshold) for a, b in zip(d1, d2)]


def oknn_accepts(model: OkNNModel, X) -> np.ndarray:
    """Boolean acceptance vector for the rows of `X`."""
    return np.array([d.accepted for d in oknn_predict_many(model, X)], dtype=bool)
