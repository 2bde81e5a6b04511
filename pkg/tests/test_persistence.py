import json

import numpy as np
import pytest

from onesided.classifiers import (Knn2Params, Metric, OkNNParams, SvmParams,
                                  knn2_fit, knn2_predict_many, load_model, oknn_fit,
                                  oknn_predict_many, save_model, svm_fit, svm_margins)
from onesided.data import Dataset
from onesided.errors import PersistenceError


def random_dataset(seed, n=40, ch=12):
    rng = np.random.default_rng(seed)
    return Dataset(rng.random((n, ch)), np.arange(n) % 3 == 0, [False] * n, [()] * n)


def test_oknn_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for metric in Metric:
        model = oknn_fit(rng.random((30, 12)), OkNNParams(2, 3, 1.5, metric))
        path = tmp_path / f"{metric.value}.json"
        save_model(model, path)
        back = load_model(path)
        queries = rng.random((100, 12))
        assert oknn_predict_many(back, queries) == oknn_predict_many(model, queries)
        assert back.params == model.params


def test_knn_and_svm_round_trip(tmp_path):
    d = random_dataset(1)
    queries = np.random.default_rng(2).random((100, 12))
    knn = knn2_fit(d, Knn2Params(k=3))
    save_model(knn, tmp_path / "k.json")
    np.testing.assert_array_equal(knn2_predict_many(load_model(tmp_path / "k.json"), queries),
                                  knn2_predict_many(knn, queries))
    svm = svm_fit(d, SvmParams(c=3.0))
    save_model(svm, tmp_path / "s.json")
    back = load_model(tmp_path / "s.json")
    assert svm_margins(back, queries).tobytes() == svm_margins(svm, queries).tobytes()
    assert back.bias == svm.bias


def test_truncated_file(tmp_path):
    path = tmp_path / "m.json"
    save_model(oknn_fit(np.eye(4), OkNNParams()), path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(PersistenceError):
        load_model(path)


def test_unknown_kind_and_version(tmp_path):
    path = tmp_path / "m.json"
    save_model(oknn_fit(np.eye(4), OkNNParams()), path)
    doc = json.loads(path.read_text())
    doc["kind"] = "random_forest"
    path.write_text(json.dumps(doc))
    with pytest.raises(PersistenceError, match="random_forest"):
        load_model(path)
    doc["kind"], doc["version"] = "oknn", 99
    path.write_text(json.dumps(doc))
    with pytest.raises(PersistenceError):
        load_model(path)


def test_corrupted_payload(tmp_path):
    path = tmp_path / "m.json"
    save_model(oknn_fit(np.eye(4), OkNNParams()), path)
    doc = json.loads(path.read_text())
    doc["payload"] = {"targets": "nope"}
    path.write_text(json.dumps(doc))
    with pytest.raises(PersistenceError):
        load_model(path)
    with pytest.raises(PersistenceError):
        load_model(tmp_path / "missing.json")
