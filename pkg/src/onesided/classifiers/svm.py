"""Linear soft-margin SVM trained by sequential minimal optimization.

The dual problem

    maximize    sum(a) - 1/2 sum_ij a_i a_j y_i y_j <x_i, x_j>
    subject to  0 <= a_i <= C,  sum(a * y) = 0

is solved two multipliers at a time. Each step picks the maximal
violating pair using second-order information (Fan, Chen & Lin, 2005)
and solves the two-variable sub-problem analytically. Training stops
when the KKT gap falls below ``tolerance``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, Label
from ..errors import ShapeError, TrainingError

_TAU = 1e-12


@dataclass(frozen=True)
class SvmParams:
    """
    Parameters
    ----------
    c : float
        Box constraint on the multipliers (complexity parameter).
    tolerance : float
        Stop once the maximal KKT violation gap is below this value.
    max_passes : int
        Stop after this many consecutive steps that leave every
        multiplier unchanged.
    max_iter : int
        Hard cap on the number of pair updates.
    """

    c: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 10
    max_iter: int = 200_000

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_passes) != self.max_passes or self.max_passes < 1:
            raise ValueError(f"max_passes must be a positive integer, got {self.max_passes}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "max_passes", int(self.max_passes))
        object.__setattr__(self, "max_iter", int(self.max_iter))

    def to_dict(self) -> dict:
        return {"c": self.c, "tolerance": self.tolerance, "max_passes": self.max_passes,
                "max_iter": self.max_iter}


@dataclass(frozen=True, eq=False)
class SvmModel:
    params: SvmParams
    weights: np.ndarray
    bias: float
    support_alphas: tuple[tuple[int, float], ...]
    n_iter: int = 0
    converged: bool = True

    @property
    def channel_count(self) -> int:
        return self.weights.size

    def alphas(self, n_train: int) -> np.ndarray:
        a = np.zeros(n_train)
        for i, v in self.support_alphas:
            a[i] = v
        return a


def _violating_sets(alpha, y, c):
    up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
    return up, low


def _clip_pair(ai, aj, yi, yj, delta, c):
    """Apply a step to (a_i, a_j) and project it back into the box."""
    if yi != yj:
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > c:
                ai, aj = c, c - diff
        elif aj > c:
            aj, ai = c, c + diff
    else:
        total = ai + aj
        ai -= delta
        aj += delta
        if total > c:
            if ai > c:
                ai, aj = c, total - c
            if aj > c:
                aj, ai = c, total - c
        else:
            if aj < 0:
                aj, ai = 0.0, total
            if ai < 0:
                ai, aj = 0.0, total
    return ai, aj


def smo_solve(X: np.ndarray, y: np.ndarray, params: SvmParams):
    """Solve the linear-kernel dual.

    Returns ``(alpha, weights, bias, n_iter, converged)``.
    """
    c, tol = params.c, params.tolerance
    n = y.size
    K = X @ X.T
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the (minimized) negative dual: Q a - 1
    stalled = 0
    converged = False
    it = 0
    while it < params.max_iter:
        score = -y * grad
        up, low = _violating_sets(alpha, y, c)
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m_up = score[i]
        m_low = score[low].min()
        if m_up - m_low < tol:
            converged = True
            break
        # Second-order working-set selection for j.
        cand = low & (score < m_up)
        gap = m_up - score[cand]
        quad = diag[i] + diag[cand] - 2.0 * K[i, cand]
        quad = np.where(quad > 0, quad, _TAU)
        j = int(np.flatnonzero(cand)[np.argmax(gap * gap / quad)])

        q = diag[i] + diag[j] - 2.0 * K[i, j]
        q = q if q > 0 else _TAU
        yi, yj = y[i], y[j]
        if yi != yj:
            delta = (-grad[i] - grad[j]) / q
        else:
            delta = (grad[i] - grad[j]) / q
        ai_old, aj_old = alpha[i], alpha[j]
        ai, aj = _clip_pair(ai_old, aj_old, yi, yj, delta, c)
        dai, daj = ai - ai_old, aj - aj_old
        it += 1
        if dai == 0.0 and daj == 0.0:
            stalled += 1
            if stalled >= params.max_passes:
                break
            continue
        stalled = 0
        alpha[i], alpha[j] = ai, aj
        grad += y * (yi * dai * K[:, i] + yj * daj * K[:, j])

    # Snap multipliers sitting within rounding of the box edges.
    alpha[np.abs(alpha) < 1e-12 * c] = 0.0
    alpha[np.abs(alpha - c) < 1e-12 * c] = c
    w = (alpha * y) @ X
    grad = y * (X @ w) - 1.0
    score = -y * grad
    up, low = _violating_sets(alpha, y, c)
    hi = score[up].max() if up.any() else score[low].min()
    lo = score[low].min() if low.any() else hi
    bias = 0.5 * (hi + lo)
    return alpha, w, float(bias), it, converged


def svm_fit(train: Dataset, params: SvmParams) -> SvmModel:
    """Fit on `train`, mapping targets to +1 and outliers to -1."""
    if len(train) == 0 or train.target_count == 0 or train.outlier_count == 0:
        raise TrainingError("SVM training needs both target and outlier instances")
    y = np.where(train.is_target, 1.0, -1.0)
    alpha, w, bias, n_iter, converged = smo_solve(train.spectra, y, params)
    w.setflags(write=False)
    support = tuple((int(i), float(alpha[i])) for i in np.flatnonzero(alpha > 0))
    return SvmModel(params=params, weights=w, bias=bias, support_alphas=support,
                    n_iter=n_iter, converged=converged)


def svm_margins(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.channel_count:
        raise ShapeError(
            f"query has {X.shape[1]} channels, model expects {model.channel_count}")
    return X @ model.weights + model.bias


def svm_predict(model: SvmModel, x) -> tuple[Label, float]:
    """Label and signed margin; a margin of exactly 0 counts as target."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("svm_predict takes a single spectrum")
    margin = float(svm_margins(model, x[None, :])[0])
    return (Label.TARGET if margin >= 0 else Label.OUTLIER), margin
