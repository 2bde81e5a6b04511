"""Metrics, internal cross-validation and the two-scenario experiment.

Scenario 1 evaluates each trained classifier on an ordinary held-out
test set drawn from the same data as its training set. Scenario 2 adds
every instance of a separate "unexpected" outlier set to that same test
set. Every algorithm in a run sees the same split.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .classifiers import (Knn2Params, Metric, OkNNParams, SvmParams, knn2_fit,
                          knn2_predict_many, oknn_accepts, oknn_fit, svm_fit, svm_margins)
from .data import Dataset, Label, augment_with_unexpected, normalize_dataset, stratified_split
from .errors import OneSidedError, TrainingError

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Target as the positive class."""

    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


class Metrics(NamedTuple):
    error_percent: float
    sensitivity: float | None
    specificity: float | None


def _as_flags(predicted, n: int) -> np.ndarray:
    flags = np.array([p is Label.TARGET or (p is not Label.OUTLIER and bool(p))
                      for p in predicted], dtype=bool)
    if flags.size != n:
        raise ValueError(f"predictor returned {flags.size} labels for {n} instances")
    return flags


def confusion(truth: np.ndarray, predicted: np.ndarray) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    return ConfusionMatrix(
        tp=int(np.sum(truth & predicted)),
        fn=int(np.sum(truth & ~predicted)),
        fp=int(np.sum(~truth & predicted)),
        tn=int(np.sum(~truth & ~predicted)),
    )


def evaluate(predict_fn: Callable[[np.ndarray], Iterable], test: Dataset) -> ConfusionMatrix:
    """Confusion matrix of `predict_fn` over `test`.

    `predict_fn` receives the (n, channels) spectra matrix and returns one
    prediction per row, either a :class:`Label` or a truthy target flag.
    """
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    predicted = _as_flags(predict_fn(test.spectra), len(test))
    return confusion(test.is_target, predicted)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    error = 100.0 * (cm.fp + cm.fn) / cm.total
    sens = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else None
    spec = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp else None
    return Metrics(error, sens, spec)


# --------------------------------------------------------------------------
# Algorithms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Algorithm:
    """A trainable classifier as seen by the experiment harness.

    `fit` receives the full labeled training set; one-sided learners pick
    out the targets themselves. `predict` maps a spectra matrix to target
    flags.
    """

    name: str
    title: str
    params_type: type
    fit: Callable
    predict: Callable
    default_grid: tuple


def _fit_oknn(train: Dataset, params: OkNNParams):
    return oknn_fit(train.target_spectra, params)


def _predict_svm(model, X):
    return svm_margins(model, X) >= 0


def _oknn_grid():
    return tuple(OkNNParams(m=m, k=k, threshold=t, metric=Metric.COSINE)
                 for m in (1, 2) for k in (1, 2) for t in (1.0, 1.5, 2.0))


ALGORITHMS: dict[str, Algorithm] = {
    "oknn": Algorithm("oknn", "One-Sided kNN", OkNNParams, _fit_oknn, oknn_accepts,
                      _oknn_grid()),
    "knn2": Algorithm("knn2", "Two-Class kNN", Knn2Params, knn2_fit, knn2_predict_many,
                      tuple(Knn2Params(k=k) for k in (1, 2, 3))),
    "svm": Algorithm("svm", "Two-Class SVM", SvmParams, svm_fit, _predict_svm,
                     tuple(SvmParams(c=c) for c in (1.0, 3.0, 5.0))),
}


def get_algorithm(name: str) -> Algorithm:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None


def parse_grid(algorithm: Algorithm, records: Sequence[Mapping]) -> tuple:
    """Build a parameter grid from a list of plain dicts."""
    grid = tuple(algorithm.params_type(**dict(r)) for r in records)
    if not grid:
        raise ValueError(f"empty parameter grid for {algorithm.name}")
    return grid


# --------------------------------------------------------------------------
# Internal cross-validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSearchResult:
    best: object
    best_index: int
    mean_errors: tuple[float, ...]
    failed: tuple[bool, ...]


def _canonical_order(dataset: Dataset) -> np.ndarray:
    """Instance indices sorted by content, independent of row order."""
    keys = []
    for i in range(len(dataset)):
        h = hashlib.sha256(dataset.spectra[i].tobytes())
        h.update(b"T" if dataset.is_target[i] else b"O")
        keys.append(h.hexdigest())
    return np.array(sorted(range(len(dataset)), key=lambda i: (keys[i], i)), dtype=np.intp)


def stratified_folds(dataset: Dataset, folds: int, seed: int) -> np.ndarray:
    """Fold number for every instance, balanced within each class."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if len(dataset) < folds:
        raise ValueError(f"{len(dataset)} instances cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    order = _canonical_order(dataset)
    assignment = np.empty(len(dataset), dtype=np.intp)
    offset = 0
    for mask in (dataset.is_target, ~dataset.is_target):
        members = order[mask[order]]
        shuffled = rng.permutation(members)
        # Continue the round-robin across classes so fold sizes stay even.
        assignment[shuffled] = (np.arange(shuffled.size) + offset) % folds
        offset += shuffled.size
    return assignment


def grid_search_cv(train: Dataset, algorithm: Algorithm | str, grid: Sequence,
                   folds: int = 3, seed: int = 0) -> GridSearchResult:
    """Pick the grid entry with the lowest mean held-out error.

    Folds are stratified by label. An entry that cannot be fitted on some
    fold scores 100% on that fold and is flagged. Ties go to the entry
    listed first.
    """
    if isinstance(algorithm, str):
        algorithm = get_algorithm(algorithm)
    grid = tuple(grid)
    if not grid:
        raise ValueError("parameter grid is empty")
    assignment = stratified_folds(train, folds, seed)
    splits = []
    for f in range(folds):
        held = np.flatnonzero(assignment == f)
        if held.size:
            splits.append((train.subset(np.flatnonzero(assignment != f)), train.subset(held)))

    errors, failed = [], []
    for params in grid:
        fold_errors, flag = [], False
        for fold_train, fold_test in splits:
            try:
                model = algorithm.fit(fold_train, params)
            except TrainingError as exc:
                log.debug("%s %s unfittable on a fold: %s", algorithm.name, params, exc)
                fold_errors.append(100.0)
                flag = True
                continue
            cm = evaluate(lambda X: algorithm.predict(model, X), fold_test)
            fold_errors.append(metrics(cm).error_percent)
        errors.append(float(np.mean(fold_errors)))
        failed.append(flag)
    best = int(np.argmin(errors))  # first minimum wins
    return GridSearchResult(grid[best], best, tuple(errors), tuple(failed))


# --------------------------------------------------------------------------
# Experiment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    algorithm: str
    run_index: int
    seed: int
    chosen_params: dict
    cv_errors: tuple[float, ...]
    scenario1: ConfusionMatrix
    scenario2: ConfusionMatrix
    train_digest: str
    test_digest: str

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm, "run_index": self.run_index, "seed": self.seed,
               "chosen_params": self.chosen_params, "cv_errors": list(self.cv_errors),
               "train_digest": self.train_digest, "test_digest": self.test_digest}
        for name in ("scenario1", "scenario2"):
            cm = getattr(self, name)
            m = metrics(cm)
            out[name] = {"confusion": cm.to_dict(), "error_percent": m.error_percent,
                         "sensitivity": m.sensitivity, "specificity": m.specificity}
        return out


@dataclass(frozen=True)
class ScenarioStats:
    mean_error_percent: float
    std_dev_percent: float

    def to_dict(self) -> dict:
        return {"mean_error_percent": self.mean_error_percent,
                "std_dev_percent": self.std_dev_percent}


def _mean_std(values: Sequence[float]) -> ScenarioStats:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return ScenarioStats(float(np.mean(arr)), std)


@dataclass(frozen=True)
class ExperimentSummary:
    """Per-algorithm results of one dataset variant over all runs."""

    variant: str
    algorithms: tuple[str, ...]
    runs: dict[str, tuple[RunResult, ...]]
    config: dict = field(default_factory=dict)

    def errors(self, algorithm: str, scenario: int) -> list[float]:
        key = f"scenario{scenario}"
        return [metrics(getattr(r, key)).error_percent for r in self.runs[algorithm]]

    def stats(self, algorithm: str, scenario: int) -> ScenarioStats:
        return _mean_std(self.errors(algorithm, scenario))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "config": self.config,
            "summary": {
                a: {"title": ALGORITHMS[a].title if a in ALGORITHMS else a,
                    "scenario1": self.stats(a, 1).to_dict(),
                    "scenario2": self.stats(a, 2).to_dict()}
                for a in self.algorithms
            },
            "runs": {a: [r.to_dict() for r in self.runs[a]] for a in self.algorithms},
        }


def _run_one(primary: Dataset, unexpected: Dataset, grids: dict[str, tuple],
             run_index: int, seed: int, train_fraction: float, folds: int) -> list[RunResult]:
    train, test = stratified_split(primary, train_fraction, seed)
    test2 = augment_with_unexpected(test, unexpected)
    train_digest, test_digest = train.digest(), test.digest()
    results = []
    for name, grid in grids.items():
        algorithm = ALGORITHMS[name]
        search = grid_search_cv(train, algorithm, grid, folds=folds, seed=seed)
        model = algorithm.fit(train, search.best)
        cm1 = evaluate(lambda X: algorithm.predict(model, X), test)
        cm2 = evaluate(lambda X: algorithm.predict(model, X), test2)
        results.append(RunResult(name, run_index, seed, search.best.to_dict(),
                                 search.mean_errors, cm1, cm2, train_digest, test_digest))
    return results


class ExperimentError(OneSidedError):
    def __init__(self, run_index: int, cause: Exception):
        super().__init__(f"run {run_index} failed: {cause}")
        self.run_index = run_index


def run_experiment(primary: Dataset, unexpected: Dataset,
                   algorithms: Mapping[str, Sequence] | Sequence[str],
                   n_runs: int = 10, seed0: int = 0, train_fraction: float = 0.67,
                   folds: int = 3, variant: str = "default", jobs: int = 1,
                   on_run: Callable[[int, list[RunResult]], None] | None = None,
                   ) -> ExperimentSummary:
    """Repeat split / tune / fit / evaluate `n_runs` times.

    Run ``i`` uses seed ``seed0 + i`` for both the split and the internal
    cross-validation folds. `algorithms` maps algorithm names to their
    parameter grids; a plain list of names uses the default grids. Both
    datasets are normalized per instance before use.

    `on_run` is called with each run's results as soon as they are ready;
    with ``jobs > 1`` that order follows completion, but the returned
    summary is always ordered by run index.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if primary.channel_count != unexpected.channel_count:
        raise ValueError("primary and unexpected datasets have different channel counts")
    if isinstance(algorithms, Mapping):
        grids = {name: tuple(grid) for name, grid in algorithms.items()}
    else:
        grids = {name: get_algorithm(name).default_grid for name in algorithms}
    for name, grid in grids.items():
        get_algorithm(name)
        if not grid:
            raise ValueError(f"empty parameter grid for {name}")

    primary = normalize_dataset(primary)
    unexpected = normalize_dataset(unexpected)
    args = [(primary, unexpected, grids, i, seed0 + i, train_fraction, folds)
            for i in range(n_runs)]

    by_run: dict[int, list[RunResult]] = {}
    if jobs > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_one, *a): a[3] for a in args}
            for fut in as_completed(futures):
                i = futures[fut]
                try:
                    by_run[i] = fut.result()
                except Exception as exc:
                    raise ExperimentError(i, exc) from exc
                if on_run:
                    on_run(i, by_run[i])
    else:
        for a in args:
            i = a[3]
            try:
                by_run[i] = _run_one(*a)
            except Exception as exc:
                raise ExperimentError(i, exc) from exc
            if on_run:
                on_run(i, by_run[i])

    runs = {name: tuple(r for i in sorted(by_run) for r in by_run[i] if r.algorithm == name)
            for name in grids}
    config = {
        "variant": variant, "n_runs": n_runs, "seed0": seed0,
        "train_fraction": train_fraction, "folds": folds,
        "grids": {name: [p.to_dict() for p in grid] for name, grid in grids.items()},
        "primary": {"instances": len(primary), "targets": primary.target_count,
                    "channels": primary.channel_count},
        "unexpected": {"instances": len(unexpected)},
    }
    return ExperimentSummary(variant, tuple(grids), runs, config)


# --------------------------------------------------------------------------
# Reporting
# --------------------------------------------------------------------------

def format_cell(mean: float, std: float) -> str:
    return f"{mean:.2f} ({std:.2f})"


def summarize_table(summaries: ExperimentSummary | Sequence[ExperimentSummary]) -> str:
    """Plain-text table: one row per variant and algorithm, ``error (std)`` cells."""
    if isinstance(summaries, ExperimentSummary):
        summaries = [summaries]
    if not summaries:
        raise ValueError("nothing to summarize")
    rows = [("Algorithm", "Variant", "Scenario 1", "Scenario 2"),
            ("", "", "Error % (std. dev.)", "Error % (std. dev.)")]
    for s in summaries:
        for a in s.algorithms:
            s1, s2 = s.stats(a, 1), s.stats(a, 2)
            title = ALGORITHMS[a].title if a in ALGORITHMS else a
            rows.append((title, s.variant,
                         format_cell(s1.mean_error_percent, s1.std_dev_percent),
                         format_cell(s2.mean_error_percent, s2.std_dev_percent)))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(2, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def results_to_json(summaries: Sequence[ExperimentSummary]) -> str:
    doc = {"format": "onesided-results", "version": 1,
           "experiments": [s.to_dict() for s in summaries]}
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def stats_from_json(text: str) -> dict[tuple[str, str, int], ScenarioStats]:
    """Read back ``(variant, algorithm, scenario) -> stats`` from exported JSON."""
    doc = json.loads(text)
    out = {}
    for exp in doc["experiments"]:
        for algo, entry in exp["summary"].items():
            for sc in (1, 2):
                d = entry[f"scenario{sc}"]
                out[(exp["variant"], algo, sc)] = ScenarioStats(
                    d["mean_error_percent"], d["std_dev_percent"])
    return out


def error_increase(summary: ExperimentSummary, algorithm: str) -> float:
    """Scenario 2 mean error minus Scenario 1 mean error, in percentage points."""
    return (summary.stats(algorithm, 2).mean_error_percent
            - summary.stats(algorithm, 1).mean_error_percent)
