"""Conventional two-class k-nearest-neighbour classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, Label
from ..errors import ShapeError, TrainingError
from .distances import Metric, pairwise_distances


@dataclass(frozen=True)
class Knn2Params:
    k: int = 1
    metric: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    def to_dict(self) -> dict:
        return {"k": self.k, "metric": self.metric.value}


@dataclass(frozen=True, eq=False)
class Knn2Model:
    params: Knn2Params
    spectra: np.ndarray
    is_target: np.ndarray

    @property
    def channel_count(self) -> int:
        return self.spectra.shape[1]


def knn2_fit(train: Dataset, params: Knn2Params) -> Knn2Model:
    if len(train) == 0:
        raise TrainingError("cannot fit kNN on an empty training set")
    if params.k > len(train):
        raise TrainingError(f"k={params.k} exceeds the {len(train)} training instances")
    return Knn2Model(params, train.spectra, train.is_target)


def knn2_predict_many(model: Knn2Model, X) -> np.ndarray:
    """Predicted target flags for the rows of `X`.

    Majority vote among the k nearest training instances; an even split
    goes to the label of the single nearest one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.channel_count:
        raise ShapeError(
            f"query has {X.shape[1]} channels, model expects {model.channel_count}")
    D = pairwise_distances(X, model.spectra, model.params.metric)
    order = np.argsort(D, axis=1, kind="stable")[:, :model.params.k]
    votes = model.is_target[order]
    n_target = votes.sum(axis=1)
    n_outlier = model.params.k - n_target
    return np.where(n_target == n_outlier, votes[:, 0], n_target > n_outlier)


def knn2_predict(model: Knn2Model, x) -> Label:
    hit = knn2_predict_many(model, np.asarray(x, dtype=np.float64)[None, :])[0]
    return Label.TARGET if hit else Label.OUTLIER
