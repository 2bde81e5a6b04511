import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import make_dataset, small_synth
from onesided.classifiers import Knn2Params, OkNNParams, SvmParams
from onesided.data import Dataset, Label, normalize_dataset
from onesided.errors import TrainingError
from onesided.evaluation import (ALGORITHMS, ConfusionMatrix, ExperimentError, confusion,
                                 error_increase, evaluate, format_cell, get_algorithm,
                                 grid_search_cv, metrics, parse_grid, results_to_json,
                                 run_experiment, stats_from_json, stratified_folds,
                                 summarize_table)
from onesided.synthgen import SynthConfig, gen_dataset


# ---------------------------------------------------------------- metrics

def test_evaluate_examples():
    d = make_dataset(5, 5)
    truth = d.is_target.copy()
    assert evaluate(lambda X: truth, d) == ConfusionMatrix(tp=5, fn=0, fp=0, tn=5)
    assert evaluate(lambda X: [Label.TARGET] * len(X), d) == ConfusionMatrix(5, 0, 5, 0)
    with pytest.raises(ValueError):
        evaluate(lambda X: truth, Dataset.empty(3))


@settings(max_examples=100)
@given(truth=st.lists(st.booleans(), min_size=1, max_size=50), seed=st.integers(0, 1000))
def test_confusion_counts_everything(truth, seed):
    pred = np.random.default_rng(seed).random(len(truth)) < 0.5
    cm = confusion(truth, pred)
    assert cm.total == len(truth)
    assert cm.tp + cm.fn == sum(truth)


def test_metrics_examples():
    assert metrics(ConfusionMatrix(tp=5, fn=5, fp=0, tn=10)) == (25.0, 0.5, 1.0)
    assert metrics(ConfusionMatrix(3, 0, 0, 4)).error_percent == 0.0
    m = metrics(ConfusionMatrix(0, 0, 2, 4))
    assert m.sensitivity is None and m.specificity == 4 / 6
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_format_cell():
    assert format_cell(6.49, 2.03) == "6.49 (2.03)"
    assert format_cell(0.0, 0.0) == "0.00 (0.00)"


def test_algorithm_registry_and_grids():
    assert [p.threshold for p in ALGORITHMS["oknn"].default_grid[:3]] == [1.0, 1.5, 2.0]
    assert {(p.m, p.k) for p in ALGORITHMS["oknn"].default_grid} == {(1, 1), (1, 2), (2, 1),
                                                                     (2, 2)}
    assert [p.k for p in ALGORITHMS["knn2"].default_grid] == [1, 2, 3]
    assert [p.c for p in ALGORITHMS["svm"].default_grid] == [1.0, 3.0, 5.0]
    assert parse_grid(get_algorithm("knn2"), [{"k": 4}]) == (Knn2Params(k=4),)
    with pytest.raises(ValueError):
        get_algorithm("forest")
    with pytest.raises(ValueError):
        parse_grid(get_algorithm("svm"), [])


# ---------------------------------------------------------------- grid search

def test_folds_are_stratified():
    d = make_dataset(20, 10)
    a = stratified_folds(d, 3, seed=4)
    for f in range(3):
        assert abs((a[d.is_target] == f).sum() - 20 / 3) < 1
        assert abs((a[~d.is_target] == f).sum() - 10 / 3) < 1
    assert np.array_equal(a, stratified_folds(d, 3, seed=4))


def test_single_entry_grid():
    d = make_dataset(12, 9)
    res = grid_search_cv(d, "knn2", [Knn2Params(k=2)], seed=1)
    assert res.best == Knn2Params(k=2) and res.best_index == 0


def test_tie_goes_to_first_entry():
    d = make_dataset(12, 9)
    # Duplicate entries always score identically.
    grid = [SvmParams(c=2.0), SvmParams(c=2.0, tolerance=1e-3)]
    res = grid_search_cv(d, "svm", grid)
    assert res.mean_errors[0] == res.mean_errors[1] and res.best_index == 0


def test_unfittable_entry_scores_100():
    d = make_dataset(5, 9)
    grid = [OkNNParams(m=3, k=3), OkNNParams(m=1, k=1)]
    res = grid_search_cv(d, "oknn", grid)
    assert res.failed == (True, False)
    assert res.mean_errors[0] == 100.0 and res.best_index == 1


def test_threshold_selection_against_exhaustive_oracle():
    cfg = SynthConfig(channel_count=64, seed=2, counts={1: (6, 10), 2: (30, 10), 3: (10, 6)})
    train = normalize_dataset(gen_dataset(cfg.library(), cfg))
    grid = [OkNNParams(1, 1, t) for t in (1.0, 1.5, 2.0)]
    res = grid_search_cv(train, "oknn", grid, folds=3, seed=2)

    assignment = stratified_folds(train, 3, seed=2)
    fold_errors = {t: [] for t in (1.0, 1.5, 2.0)}
    for f in range(3):
        fit = train.subset(np.flatnonzero((assignment != f) & train.is_target))
        held = train.subset(np.flatnonzero(assignment == f))
        scores = oracles.oknn_scores(fit.spectra.tolist(), held.spectra.tolist(), 1, 1, "cosine")
        for t in fold_errors:
            wrong = sum(oracles.accept(d1, d2, t) != truth
                        for (d1, d2), truth in zip(scores, held.is_target))
            fold_errors[t].append(100.0 * wrong / len(held))
    oracle_means = [sum(v) / 3 for v in fold_errors.values()]
    np.testing.assert_allclose(res.mean_errors, oracle_means, atol=1e-9)
    # theta=1 rejects too many targets, theta=2 lets in too many outliers.
    assert oracle_means[1] < min(oracle_means[0], oracle_means[2])
    assert res.best.threshold == 1.5


def test_grid_search_ignores_row_order():
    primary, _ = small_synth()
    train = normalize_dataset(primary)
    perm = np.random.default_rng(9).permutation(len(train))
    for name in ("oknn", "knn2"):
        grid = ALGORITHMS[name].default_grid
        a = grid_search_cv(train, name, grid, seed=5)
        b = grid_search_cv(train.subset(perm), name, grid, seed=5)
        assert a.best == b.best and a.mean_errors == b.mean_errors


# ---------------------------------------------------------------- experiment

@pytest.fixture(scope="module")
def synth():
    return small_synth()


@pytest.fixture(scope="module")
def experiment(synth):
    primary, unexpected = synth
    return run_experiment(primary, unexpected, ["oknn", "knn2", "svm"], n_runs=3, seed0=7)


def test_run_accounting(experiment, synth):
    primary, unexpected = synth
    for name in experiment.algorithms:
        runs = experiment.runs[name]
        assert [r.run_index for r in runs] == [0, 1, 2]
        assert [r.seed for r in runs] == [7, 8, 9]
        for r in runs:
            assert r.scenario2.total == r.scenario1.total + len(unexpected)
            assert r.scenario2.tp == r.scenario1.tp and r.scenario2.fn == r.scenario1.fn
            assert (r.scenario2.fp + r.scenario2.tn
                    == r.scenario1.fp + r.scenario1.tn + len(unexpected))


def test_shared_split(experiment):
    for i in range(3):
        digests = {(experiment.runs[a][i].train_digest, experiment.runs[a][i].test_digest)
                   for a in experiment.algorithms}
        assert len(digests) == 1


def test_aggregation_recomputes(experiment):
    for name in experiment.algorithms:
        for sc in (1, 2):
            errs = experiment.errors(name, sc)
            s = experiment.stats(name, sc)
            mean = sum(errs) / len(errs)
            std = math.sqrt(sum((e - mean) ** 2 for e in errs) / (len(errs) - 1))
            assert abs(s.mean_error_percent - mean) <= 1e-9
            assert abs(s.std_dev_percent - std) <= 1e-9
        assert error_increase(experiment, name) == pytest.approx(
            experiment.stats(name, 2).mean_error_percent
            - experiment.stats(name, 1).mean_error_percent)


def test_experiment_is_deterministic_and_parallel_safe(experiment, synth):
    primary, unexpected = synth
    again = run_experiment(primary, unexpected, ["oknn", "knn2", "svm"], n_runs=3, seed0=7)
    assert results_to_json([again]) == results_to_json([experiment])
    par = run_experiment(primary, unexpected, ["oknn", "knn2", "svm"], n_runs=3, seed0=7,
                         jobs=2)
    assert results_to_json([par]) == results_to_json([experiment])


def test_empty_unexpected_set(synth):
    primary, _ = synth
    s = run_experiment(primary, Dataset.empty(primary.channel_count), ["knn2"], n_runs=2)
    assert s.errors("knn2", 1) == s.errors("knn2", 2)


def test_failed_run_names_index(synth):
    primary, unexpected = synth
    with pytest.raises(ExperimentError, match="run 0") as info:
        run_experiment(primary, unexpected, {"knn2": [Knn2Params(k=500)]}, n_runs=2)
    assert info.value.run_index == 0
    assert isinstance(info.value.__cause__, TrainingError)


def test_table_and_json(experiment):
    table = summarize_table(experiment)
    for title in ("One-Sided kNN", "Two-Class kNN", "Two-Class SVM"):
        assert title in table
    s = experiment.stats("oknn", 1)
    assert format_cell(s.mean_error_percent, s.std_dev_percent) in table
    back = stats_from_json(results_to_json([experiment]))
    for name in experiment.algorithms:
        for sc in (1, 2):
            got, want = back[("default", name, sc)], experiment.stats(name, sc)
            assert abs(got.mean_error_percent - want.mean_error_percent) <= 1e-9
            assert abs(got.std_dev_percent - want.std_dev_percent) <= 1e-9


def test_single_run_std_is_zero(synth):
    primary, unexpected = synth
    s = run_experiment(primary, unexpected, ["knn2"], n_runs=1)
    assert s.stats("knn2", 1).std_dev_percent == 0.0
