"""Distance functions between spectra.

Scalar functions (`cosine_distance`, `euclidean_distance`) validate their
inputs and raise on undefined cases. `pairwise_distances` is the batch
form used by the classifiers; under the cosine metric it maps any pair
involving an all-zero spectrum to the maximum distance 2.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from ..errors import DistanceError, ShapeError

COSINE_MAX = 2.0
_CHUNK_ELEMENTS = 4_000_000


class Metric(str, Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def cosine_distance(a, b) -> float:
    """``1 - a.b / (|a| |b|)``, in [0, 2].

    Computed as half the squared distance between the unit vectors, which
    is algebraically identical but returns exactly 0 for identical inputs.
    """
    a, b = _pair(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DistanceError("cosine distance is undefined for an all-zero vector")
    diff = a / na - b / nb
    return float(min(0.5 * np.dot(diff, diff), COSINE_MAX))


def euclidean_distance(a, b) -> float:
    a, b = _pair(a, b)
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


def _unit_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(X, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return X / safe[:, None], zero


def pairwise_distances(X, Y, metric: Metric | str) -> np.ndarray:
    """Distance matrix between the rows of `X` and the rows of `Y`.

    Returns
    -------
    D : ndarray, shape (len(X), len(Y))
    """
    metric = Metric(metric)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"channel mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if metric is Metric.EUCLIDEAN:
        A, B = X, Y
    else:
        A, zx = _unit_rows(X)
        B, zy = _unit_rows(Y)
    # Exact row differences rather than the |a|^2 + |b|^2 - 2ab expansion,
    # so identical rows give exactly 0.
    sq = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _CHUNK_ELEMENTS // max(1, B.size))
    for start in range(0, A.shape[0], step):
        diff = A[start:start + step, None, :] - B[None, :, :]
        sq[start:start + step] = np.einsum("ijk,ijk->ij", diff, diff)
    if metric is Metric.EUCLIDEAN:
        return np.sqrt(sq)
    D = np.minimum(0.5 * sq, COSINE_MAX)
    D[zx, :] = COSINE_MAX
    D[:, zy] = COSINE_MAX
    return D


def nearest(D_row: np.ndarray, n: int) -> np.ndarray:
    """Indices of the `n` smallest entries, ties going to the lower index."""
    return np.argsort(D_row, kind="stable")[:n]
