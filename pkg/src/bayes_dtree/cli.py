"""Command-line entry point.

Every ``run`` flag can also come from the environment as ``BAYES_DTREE_<FLAG>``
(upper case, dashes as underscores), or from a JSON file given with
``--config``. Precedence: command line, environment, config file, built-in
defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields

from .harness import (
    COMPARISON_GRID,
    SAMPLERS,
    ExperimentConfig,
    compare_table,
    emit_results,
    read_results,
    run_experiment,
)

ENV_PREFIX = "BAYES_DTREE_"
log = logging.getLogger("bayes_dtree")

# flag -> ExperimentConfig field
_RUN_FLAGS = {
    "dataset": "dataset",
    "label-col": "label_col",
    "sampler": "sampler",
    "units": "units",
    "iterations": "iterations",
    "beta": "beta",
    "a": "a",
    "max-depth": "max_depth",
    "burn-in": "burn_in_fraction",
    "folds": "folds",
    "seed": "seed",
    "missing": "missing",
    "binarize-above": "binarize_above",
    "jobs": "n_jobs",
}


def _env(flag: str):
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))


def _bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags and env vars override it")
    p.add_argument("--dataset", help="CSV file")
    p.add_argument("--label-col", help="label column name, or position when --no-header")
    p.add_argument("--header", dest="header", type=_bool, nargs="?", const=True,
                   help="whether the CSV has a header row (default true)")
    p.add_argument("--no-header", dest="header", action="store_const", const=False)
    p.add_argument("--sampler", choices=SAMPLERS)
    p.add_argument("--units", type=int, help="MCMC chains or SMC-EA particles")
    p.add_argument("--iterations", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--burn-in", type=float, help="MCMC burn-in fraction")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--missing", choices=("drop", "impute"))
    p.add_argument("--binarize-above", type=float, help="map labels to label > value")
    p.add_argument("--jobs", type=int, help="worker threads for chains/particles")
    p.add_argument("--timing", type=_bool, nargs="?", const=True,
                   help="include wall-clock seconds in the JSON (breaks byte-identity)")


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser, overrides: dict | None = None) -> ExperimentConfig:
    values = {}
    config_path = args.config or _env("config")
    if config_path:
        values.update(ExperimentConfig.load(config_path).to_dict())
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    for flag, name in list(_RUN_FLAGS.items()) + [("header", "header")]:
        raw = _env(flag)
        if raw is not None:
            values[name] = _coerce(raw, types[name], parser, flag)
        cli = getattr(args, name if flag == "header" else flag.replace("-", "_"))
        if cli is not None:
            values[name] = cli
    values.update(overrides or {})
    if not values.get("dataset"):
        parser.error("--dataset is required (or BAYES_DTREE_DATASET / --config)")
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))


def _coerce(raw: str, typ, parser, flag):
    typ = str(typ)
    try:
        if typ.startswith("bool"):
            return _bool(raw)
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
    except (ValueError, argparse.ArgumentTypeError):
        parser.error(f"bad value for {ENV_PREFIX}{flag.upper().replace('-', '_')}: {raw!r}")
    return raw


def _timing(args) -> bool:
    if args.timing is not None:
        return args.timing
    raw = _env("timing")
    return _bool(raw) if raw is not None else False


def cmd_run(args, parser) -> int:
    config = _resolve(args, parser)
    result = run_experiment(config, timing=_timing(args))
    out = args.out or _env("out")
    if out:
        emit_results(result, out)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(result.to_json())
    print(
        f"{result.sampler} units={result.units} iterations={result.iterations}: "
        f"ensemble {100 * result.accuracy_ensemble:.1f}%  map-tree {100 * result.accuracy_map_tree:.1f}%",
        file=sys.stderr,
    )
    return 0


def cmd_grid(args, parser) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    results = []
    for units, iterations in COMPARISON_GRID:
        for sampler in SAMPLERS:
            config = _resolve(args, parser, {"sampler": sampler, "units": units, "iterations": iterations})
            result = run_experiment(config, timing=_timing(args))
            path = os.path.join(args.out_dir, f"{sampler}_{units}x{iterations}.json")
            emit_results(result, path)
            results.append(result)
            print(f"{sampler:6s} {units:5d} x {iterations:5d}: {100 * result.accuracy_ensemble:.1f}%", file=sys.stderr)
    sys.stdout.write(compare_table(results))
    return 0


def cmd_table(args, parser) -> int:
    results = [read_results(p) for p in args.inputs]
    text = compare_table(results, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayes-dtree", description="Bayesian decision-tree samplers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cross-validate one sampler configuration")
    _add_run_options(run)
    run.add_argument("--out", help="JSON output path (stdout when omitted)")
    run.set_defaults(func=cmd_run, subparser=run)

    grid = sub.add_parser("grid", help="run both samplers over the 10x1000 / 100x100 / 1000x10 grid")
    _add_run_options(grid)
    grid.add_argument("--out-dir", required=True)
    grid.set_defaults(func=cmd_grid, subparser=grid)

    table = sub.add_parser("table", help="tabulate result JSON files")
    table.add_argument("--inputs", nargs="+", required=True)
    table.add_argument("--format", choices=("text", "csv"), default="text")
    table.add_argument("--out")
    table.set_defaults(func=cmd_table, subparser=table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args, args.subparser)


if __name__ == "__main__":
    sys.exit(main())
