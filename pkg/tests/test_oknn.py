import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from onesided.classifiers import (Metric, OkNNParams, oknn_accepts, oknn_fit, oknn_predict,
                                  oknn_predict_many)
from onesided.data import normalize_instance
from onesided.errors import ShapeError, TrainingError

LINE = [[0.0], [1.0], [2.0]]


def euclid(m=1, k=1, threshold=1.5):
    return OkNNParams(m=m, k=k, threshold=threshold, metric=Metric.EUCLIDEAN)


def test_fit_d2_on_line():
    model = oknn_fit(LINE, euclid())
    assert model.d2_per_target.tolist() == [1.0, 1.0, 1.0]
    table = [[oracles.euclid(a, b) for b in LINE] for a in LINE]
    assert [min(r[j] for j in range(3) if j != i) for i, r in enumerate(table)] == [1, 1, 1]


def test_duplicate_targets_have_zero_radius():
    model = oknn_fit([[0.5], [0.5], [3.0]], euclid())
    assert model.d2_per_target.tolist() == [0.0, 0.0, 2.5]


def test_too_few_targets():
    with pytest.raises(TrainingError, match="at least 2"):
        oknn_fit([[1.0]], euclid())
    with pytest.raises(TrainingError, match="at least 4"):
        oknn_fit(LINE, euclid(m=3, k=1))


def test_predict_examples():
    model = oknn_fit(LINE, euclid())
    inside = oknn_predict(model, [0.4])
    assert (inside.d1, inside.d2, inside.accepted) == (pytest.approx(0.4), 1.0, True)
    assert inside.ratio == pytest.approx(0.4)
    outside = oknn_predict(model, [3.8])
    assert outside.d1 == pytest.approx(1.8) and outside.d2 == 1.0
    assert outside.ratio == pytest.approx(1.8) and not outside.accepted
    for theta in (0.01, 1.0, 2.0):
        member = oknn_predict(oknn_fit(LINE, euclid(threshold=theta)), [1.0])
        assert member.d1 == 0.0 and member.accepted


def test_threshold_equality_accepts():
    model = oknn_fit(LINE, euclid(threshold=1.5))
    d = oknn_predict(model, [3.5])
    assert d.ratio == 1.5 and d.accepted


def test_zero_radius_rule():
    model = oknn_fit([[0.5], [0.5], [3.0]], euclid(threshold=100.0))
    hit = oknn_predict(model, [0.5])
    assert (hit.ratio, hit.accepted) == (0.0, True)
    miss = oknn_predict(model, [0.6])
    assert miss.ratio == math.inf and not miss.accepted


def test_shape_errors():
    model = oknn_fit(np.eye(3), OkNNParams())
    with pytest.raises(ShapeError):
        oknn_predict(model, [1.0, 0.0])
    with pytest.raises(ShapeError):
        oknn_predict(model, np.eye(3))


def test_params_validation():
    for bad in ({"m": 0}, {"k": 1.5}, {"threshold": 0}, {"metric": "manhattan"}):
        with pytest.raises(ValueError):
            OkNNParams(**bad)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 3), k=st.integers(1, 3),
       metric=st.sampled_from(["cosine", "euclidean"]))
def test_matches_oracle_and_is_order_free(seed, m, k, metric):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(max(m, k) + 1, 21))
    T = rng.random((n, int(rng.integers(2, 6))))
    X = rng.random((5, T.shape[1]))
    params = OkNNParams(m=m, k=k, threshold=1.5, metric=metric)
    model = oknn_fit(T, params)
    perm = oknn_fit(T[rng.permutation(n)], params)
    batch = oknn_predict_many(model, X)
    for x, b in zip(X, batch):
        d = oknn_predict(model, x)
        d1, d2, acc = oracles.oknn(T.tolist(), x.tolist(), m, k, 1.5, metric)
        assert abs(d.d1 - d1) <= 1e-12 and abs(d.d2 - d2) <= 1e-12 and d.accepted == acc
        assert d == oknn_predict(model, x) == b
        p = oknn_predict(perm, x)
        assert p.accepted == d.accepted
        assert abs(p.d1 - d.d1) <= 1e-12 and abs(p.d2 - d.d2) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3), shift=st.floats(-50, 50))
def test_cosine_decision_ignores_rescaled_input(seed, scale, shift):
    rng = np.random.default_rng(seed)
    T = np.array([normalize_instance(t) for t in rng.random((12, 8))])
    model = oknn_fit(T, OkNNParams(m=2, k=2, threshold=1.0))
    raw = rng.random(8)
    a = oknn_predict(model, normalize_instance(raw))
    b = oknn_predict(model, normalize_instance(scale * raw + shift))
    assert abs(a.d1 - b.d1) <= 1e-9
    if abs(a.ratio - 1.0) > 1e-6:
        assert a.accepted == b.accepted


def test_accepts_vector():
    model = oknn_fit(LINE, euclid())
    assert oknn_accepts(model, [[0.4], [3.8], [2.0]]).tolist() == [True, False, True]
