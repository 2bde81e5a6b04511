"""Command-line front end.

Subcommands::

    onesided synth       write synthetic primary and unexpected CSV files
    onesided experiment  run the two-scenario experiment, print and save results
    onesided tune        internal cross-validation over a parameter grid
    onesided train       fit one classifier and save it as JSON
    onesided predict     classify a CSV file with a saved model

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .classifiers import (Knn2Model, OkNNModel, SvmModel, load_model, oknn_predict_many,
                          save_model, svm_margins)
from .data import Dataset, load_csv, normalize_dataset, relabel, write_csv
from .errors import FormatError, LabelError, OneSidedError, ParseError, PersistenceError
from .evaluation import (ALGORITHMS, ExperimentError, RunResult, get_algorithm, grid_search_cv,
                         metrics, parse_grid, results_to_json, run_experiment, summarize_table)
from .synthgen import SynthConfig, gen_dataset, gen_unexpected

log = logging.getLogger("onesided")


class ConfigError(Exception):
    """Bad command-line arguments, configuration or unreadable inputs."""


# --------------------------------------------------------------------------
# Config helpers
# --------------------------------------------------------------------------

def _read_json(path) -> object:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None


def _load_dataset(path) -> Dataset:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"data file not found: {p}")
    try:
        return load_csv(p)
    except (FormatError, ParseError, LabelError) as exc:
        raise ConfigError(str(exc)) from None


def expand_grid(algorithm: str, doc) -> tuple:
    """Grid from a list of records, or from a dict of value lists (product)."""
    algo = get_algorithm(algorithm)
    if isinstance(doc, dict):
        keys = list(doc)
        values = [v if isinstance(v, list) else [v] for v in doc.values()]
        records = [dict(zip(keys, combo)) for combo in itertools.product(*values)]
    elif isinstance(doc, list):
        records = doc
    else:
        raise ConfigError(f"grid for {algorithm} must be a list or an object")
    try:
        return parse_grid(algo, records)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid for {algorithm}: {exc}") from None


def load_grids(path, algos) -> dict[str, tuple]:
    doc = _read_json(path) if path else {}
    if not isinstance(doc, dict):
        raise ConfigError("grid file must hold a JSON object keyed by algorithm name")
    unknown = set(doc) - set(ALGORITHMS)
    if unknown:
        raise ConfigError(f"grid file names unknown algorithms: {sorted(unknown)}")
    return {a: expand_grid(a, doc[a]) if a in doc else ALGORITHMS[a].default_grid
            for a in algos}


def _parse_algos(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    if not algos:
        raise ConfigError("--algos is empty")
    for a in algos:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}; choose from {sorted(ALGORITHMS)}")
    return algos


def _parse_variant(text: str) -> tuple[str, list[str]]:
    name, sep, mats = text.partition("=")
    materials = [m.strip() for m in mats.split(";") if m.strip()]
    if not sep or not name.strip() or not materials:
        raise ConfigError(f"--variant expects NAME=material[;material...], got {text!r}")
    return name.strip(), materials


@dataclass
class ExperimentConfig:
    data: str | None = None
    unexpected: str | None = None
    synth: dict = field(default_factory=dict)
    algos: list[str] = field(default_factory=lambda: ["oknn", "knn2", "svm"])
    grid_file: str | None = None
    n_runs: int = 10
    seed0: int = 0
    train_fraction: float = 0.67
    folds: int = 3
    variants: list[str] = field(default_factory=list)
    out_json: str | None = None
    out_table: str | None = None
    jobs: int = 1

    def validate(self):
        if self.n_runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.n_runs}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


_CONFIG_KEYS = {
    "data": "data", "unexpected": "unexpected", "synth": "synth", "algos": "algos",
    "grid_file": "grid_file", "runs": "n_runs", "n_runs": "n_runs", "seed": "seed0",
    "seed0": "seed0", "train_frac": "train_fraction", "train_fraction": "train_fraction",
    "folds": "folds", "variants": "variants", "out_json": "out_json",
    "out_table": "out_table", "jobs": "jobs",
}


def build_experiment_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig(
        data=args.data, unexpected=args.unexpected,
        synth=_read_json(args.synth_config) if args.synth_config else {},
        algos=_parse_algos(args.algos), grid_file=args.grid_file, n_runs=args.runs,
        seed0=args.seed, train_fraction=args.train_frac, folds=args.folds,
        variants=list(args.variant or []), out_json=args.out_json, out_table=args.out_table,
        jobs=args.jobs,
    )
    if args.config:
        doc = _read_json(args.config)
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in doc.items():
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "algos" and isinstance(value, str):
                value = _parse_algos(value)
            setattr(cfg, _CONFIG_KEYS[key], value)
    cfg.validate()
    return cfg


def _synth_config(doc: dict) -> SynthConfig:
    try:
        return SynthConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth config: {exc}") from None


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def _run_line(variant: str, r: RunResult) -> str:
    parts = [f"[{variant}] run {r.run_index} seed {r.seed} {r.algorithm}",
             "params=" + json.dumps(r.chosen_params, sort_keys=True)]
    for label, cm in (("S1", r.scenario1), ("S2", r.scenario2)):
        m = metrics(cm)
        parts.append(f"{label}: error={m.error_percent:.2f}% sens={_fmt(m.sensitivity)} "
                     f"spec={_fmt(m.specificity)} cm(tp,fn,fp,tn)=({cm.tp},{cm.fn},{cm.fp},{cm.tn})")
    return " | ".join(parts)


def cmd_experiment(args) -> int:
    cfg = build_experiment_config(args)
    if cfg.data:
        primary = _load_dataset(cfg.data)
        source = {"data": cfg.data}
    else:
        sc = _synth_config(cfg.synth)
        primary = gen_dataset(sc.library(), sc)
        source = {"synth": sc.to_dict()}
    if cfg.unexpected:
        unexpected = _load_dataset(cfg.unexpected)
        source["unexpected"] = cfg.unexpected
    else:
        sc = _synth_config(cfg.synth)
        unexpected = gen_unexpected(sc.seed, sc.n_unexpected, primary.channel_count)
        source["unexpected_synth"] = {"seed": sc.seed, "n": sc.n_unexpected}
    if primary.channel_count != unexpected.channel_count:
        raise ConfigError(f"primary data has {primary.channel_count} channels, "
                          f"unexpected data has {unexpected.channel_count}")
    grids = load_grids(cfg.grid_file, cfg.algos)

    variants = [("as-labeled", None)] if not cfg.variants else [
        _parse_variant(v) for v in cfg.variants]
    summaries = []
    for name, materials in variants:
        data = relabel(primary, materials) if materials else primary

        def on_run(i, results, name=name):
            for r in results:
                print(_run_line(name, r), flush=True)

        try:
            summary = run_experiment(data, unexpected, grids, n_runs=cfg.n_runs,
                                     seed0=cfg.seed0, train_fraction=cfg.train_fraction,
                                     folds=cfg.folds, variant=name, jobs=cfg.jobs,
                                     on_run=on_run)
        except ExperimentError as exc:
            print(f"error: variant {name}: {exc}", file=sys.stderr)
            return 1
        summary.config["source"] = source
        if materials:
            summary.config["target_materials"] = materials
        summaries.append(summary)

    table = summarize_table(summaries)
    print()
    print(table, end="")
    if cfg.out_json:
        Path(cfg.out_json).write_text(results_to_json(summaries), encoding="utf-8")
    if cfg.out_table:
        Path(cfg.out_table).write_text(table, encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    doc = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.channels is not None:
        doc["channel_count"] = args.channels
    if args.n_unexpected is not None:
        doc["n_unexpected"] = args.n_unexpected
    sc = _synth_config(doc)
    primary = gen_dataset(sc.library(), sc)
    write_csv(primary, args.out)
    print(f"wrote {len(primary)} instances ({primary.target_count} targets) to {args.out}")
    if args.out_unexpected:
        unexpected = gen_unexpected(sc.seed, sc.n_unexpected, sc.channel_count)
        write_csv(unexpected, args.out_unexpected)
        print(f"wrote {len(unexpected)} unexpected outliers to {args.out_unexpected}")
    return 0


def _params_from_args(algo: str, text: str | None):
    try:
        doc = json.loads(text) if text else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("--params must be a JSON object")
    try:
        return ALGORITHMS[algo].params_type(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {algo}: {exc}") from None


def cmd_tune(args) -> int:
    data = normalize_dataset(_load_dataset(args.data))
    if args.target_materials:
        data = relabel(data, args.target_materials.split(";"))
    grid = load_grids(args.grid_file, [args.algo])[args.algo]
    result = grid_search_cv(data, args.algo, grid, folds=args.folds, seed=args.seed)
    for params, err, failed in zip(grid, result.mean_errors, result.failed):
        flag = "  (unfittable fold)" if failed else ""
        print(f"{json.dumps(params.to_dict(), sort_keys=True)}  cv_error={err:.2f}%{flag}")
    print("chosen: " + json.dumps(result.best.to_dict(), sort_keys=True))
    return 0


def cmd_train(args) -> int:
    data = normalize_dataset(_load_dataset(args.data))
    if args.target_materials:
        data = relabel(data, args.target_materials.split(";"))
    params = _params_from_args(args.algo, args.params)
    model = ALGORITHMS[args.algo].fit(data, params)
    save_model(model, args.model_out)
    print(f"saved {args.algo} model trained on {len(data)} instances to {args.model_out}")
    return 0


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except PersistenceError as exc:
        raise ConfigError(str(exc)) from None
    data = normalize_dataset(_load_dataset(args.data))
    X = data.spectra
    if isinstance(model, OkNNModel):
        print("index\tlabel\td1\td2\tratio")
        for i, d in enumerate(oknn_predict_many(model, X)):
            label = "target" if d.accepted else "outlier"
            print(f"{i}\t{label}\t{d.d1:.6g}\t{d.d2:.6g}\t{d.ratio:.6g}")
    elif isinstance(model, SvmModel):
        print("index\tlabel\tmargin")
        for i, m in enumerate(svm_margins(model, X)):
            print(f"{i}\t{'target' if m >= 0 else 'outlier'}\t{m:.6g}")
    elif isinstance(model, Knn2Model):
        print("index\tlabel")
        for i, hit in enumerate(ALGORITHMS["knn2"].predict(model, X)):
            print(f"{i}\t{'target' if hit else 'outlier'}")
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onesided", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("experiment", help="run the two-scenario experiment")
    e.add_argument("--config", help="JSON config; its values override the flags")
    e.add_argument("--data", help="primary dataset CSV (default: synthesize)")
    e.add_argument("--unexpected", help="unexpected-outlier CSV (default: synthesize)")
    e.add_argument("--synth-config", help="JSON synth config used when synthesizing")
    e.add_argument("--algos", default="oknn,knn2,svm")
    e.add_argument("--runs", type=int, default=10)
    e.add_argument("--seed", type=int, default=0, help="seed of run 0; run i uses seed+i")
    e.add_argument("--train-frac", type=float, default=0.67)
    e.add_argument("--folds", type=int, default=3)
    e.add_argument("--grid-file", help="JSON parameter grids keyed by algorithm")
    e.add_argument("--variant", action="append",
                   help="NAME=material[;material...] relabels the targets (repeatable)")
    e.add_argument("--out-json")
    e.add_argument("--out-table")
    e.add_argument("--jobs", type=int, default=1, help="parallel runs")
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("synth", help="write synthetic datasets")
    s.add_argument("--config", help="JSON synth config")
    s.add_argument("--seed", type=int)
    s.add_argument("--channels", type=int)
    s.add_argument("--n-unexpected", type=int)
    s.add_argument("--out", required=True, help="primary dataset CSV")
    s.add_argument("--out-unexpected", help="unexpected-outlier CSV")
    s.set_defaults(func=cmd_synth)

    algo_choices = sorted(ALGORITHMS)
    t = sub.add_parser("tune", help="cross-validated grid search")
    t.add_argument("--algo", required=True, choices=algo_choices)
    t.add_argument("--data", required=True)
    t.add_argument("--grid-file")
    t.add_argument("--folds", type=int, default=3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--target-materials", help="relabel: semicolon-separated names")
    t.set_defaults(func=cmd_tune)

    tr = sub.add_parser("train", help="fit a model and save it")
    tr.add_argument("--algo", required=True, choices=algo_choices)
    tr.add_argument("--data", required=True)
    tr.add_argument("--params", help='JSON object, e.g. \'{"m": 1, "k": 1, "threshold": 1.5}\'')
    tr.add_argument("--target-materials", help="relabel: semicolon-separated names")
    tr.add_argument("--model-out", required=True)
    tr.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="classify spectra with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "folds", 3) < 2:
            raise ConfigError(f"folds must be >= 2, got {args.folds}")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OneSidedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
