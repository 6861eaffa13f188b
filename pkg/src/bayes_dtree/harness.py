"""Cross-validated accuracy experiments and result tables."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .data import kfold, load_csv
from .estimators import MCMCTreeClassifier, SMCEATreeClassifier
from .rng import derive_seed
from .tree import Dataset

SCHEMA_VERSION = 1
SAMPLERS = ("mcmc", "smc-ea")
#: (units, iterations) cells of the chains-vs-iterations comparison grid.
COMPARISON_GRID = ((10, 1000), (100, 100), (1000, 10))
ABSENT = "—"


@dataclass
class ExperimentConfig:
    dataset: str = ""
    label_col: str = "-1"
    header: bool = True
    missing: str = "impute"
    binarize_above: float | None = None
    sampler: str = "smc-ea"
    units: int = 1000
    iterations: int = 10
    a: float = 1.0
    beta: float = 2.0
    max_depth: int = 15
    burn_in_fraction: float = 0.2
    folds: int = 5
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.missing not in ("drop", "impute"):
            raise ValueError("missing must be 'drop' or 'impute'")
        if self.units < 1 or self.iterations < 1:
            raise ValueError("units and iterations must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.a <= 0 or self.beta < 0 or self.max_depth < 0:
            raise ValueError("need a > 0, beta >= 0 and max_depth >= 0")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunResult:
    dataset: str
    sampler: str
    units: int
    iterations: int
    folds: int
    seed: int
    fold_accuracy: list[float]
    fold_accuracy_map: list[float]
    accuracy_ensemble: float
    accuracy_map_tree: float
    fold_acceptance_rate: list[float]
    best_log_joint: list[list[float]]
    worst_log_joint: list[list[float]]
    pheromone_trajectory: list[list[list[float]]] | None
    config: dict
    wall_clock_seconds: float | None = None
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        d = asdict(self)
        if d["wall_clock_seconds"] is None:
            del d["wall_clock_seconds"]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunResult":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(**d)


def make_estimator(config: ExperimentConfig, seed: int):
    if config.sampler == "mcmc":
        return MCMCTreeClassifier(
            chains=config.units, iterations=config.iterations, a=config.a, beta=config.beta,
            max_depth=config.max_depth, burn_in_fraction=config.burn_in_fraction,
            random_state=seed, n_jobs=config.n_jobs,
        )
    return SMCEATreeClassifier(
        particles=config.units, iterations=config.iterations, a=config.a, beta=config.beta,
        max_depth=config.max_depth, random_state=seed, n_jobs=config.n_jobs,
    )


def load_dataset(config: ExperimentConfig) -> Dataset:
    try:
        return load_csv(
            config.dataset, config.label_col, config.missing,
            header=config.header, binarize_above=config.binarize_above,
        )
    except (OSError, ValueError) as exc:
        raise type(exc)(f"loading {config.dataset!r}: {exc}") from exc


def run_experiment(config: ExperimentConfig, data: Dataset | None = None, *, timing: bool = False) -> RunResult:
    """k-fold CV of one sampler configuration.

    The fold plan depends only on ``(N, folds, seed)``, so MCMC and SMC-EA runs
    with the same seed are scored on identical splits.
    """
    config.validate()
    if data is None:
        data = load_dataset(config)
    start = time.perf_counter()
    plan = kfold(data.n_samples, config.folds, config.seed)
    acc, acc_map, rates, best, worst, pher = [], [], [], [], [], []
    for fold in range(config.folds):
        train, test = plan.train_test(fold)
        est = make_estimator(config, derive_seed(config.seed, fold))
        try:
            est.fit(data.features[train], data.labels[train])
        except Exception as exc:
            raise RuntimeError(f"fold {fold} of {config.sampler} failed: {exc}") from exc
        X_test, y_test = data.features[test], data.labels[test]
        acc.append(float(np.mean(est.predict(X_test) == y_test)))
        acc_map.append(float(np.mean(est.predict_map(X_test) == y_test)))
        rates.append(est.result_.acceptance_rate)
        best.append(est.best_log_joint_.tolist())
        worst.append(est.worst_log_joint_.tolist())
        if config.sampler == "smc-ea":
            pher.append(est.pheromone_history_.tolist())
    elapsed = time.perf_counter() - start
    return RunResult(
        dataset=os.path.basename(config.dataset) if config.dataset else "<in-memory>",
        sampler=config.sampler,
        units=config.units,
        iterations=config.iterations,
        folds=config.folds,
        seed=config.seed,
        fold_accuracy=acc,
        fold_accuracy_map=acc_map,
        accuracy_ensemble=float(np.mean(acc)),
        accuracy_map_tree=float(np.mean(acc_map)),
        fold_acceptance_rate=rates,
        best_log_joint=best,
        worst_log_joint=worst,
        pheromone_trajectory=pher if config.sampler == "smc-ea" else None,
        # n_jobs changes scheduling only, so leaving it out keeps outputs comparable.
        config={k: v for k, v in config.to_dict().items() if k != "n_jobs"},
        wall_clock_seconds=elapsed if timing else None,
    )


def emit_results(result: RunResult, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(result.to_json())
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> RunResult:
    with open(path, encoding="utf-8") as fh:
        return RunResult.from_json(fh.read())


def table_rows(results) -> list[list[str]]:
    """One row per (dataset, units, iterations) cell: units, iterations, MCMC %, SMC-EA %."""
    cells: dict[tuple, dict[str, float]] = {}
    for r in results:
        cells.setdefault((r.dataset, r.units, r.iterations), {})[r.sampler] = r.accuracy_ensemble
    rows = []
    for (dataset, units, iters), by in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], -kv[0][2])):
        pct = [f"{100 * by[s]:.1f}" if s in by else ABSENT for s in SAMPLERS]
        rows.append([dataset, str(units), str(iters), *pct])
    return rows


def compare_table(results, fmt: str = "text") -> str:
    header = ["Chains_Trees", "Iterations", "MCMC", "SMC-EA"]
    rows = table_rows(results)
    datasets = {r[0] for r in rows}
    if len(datasets) > 1:
        header = ["Dataset"] + header
    else:
        rows = [r[1:] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]
    lines = [" | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip() for cells in [header] + rows]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
