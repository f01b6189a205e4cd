"""Command-line entry point: ``python -m treesmooth <command>``.

Exit codes: 0 success, 1 data or model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from treesmooth import config, fetch, forest, harness, regularize, reporting
from treesmooth.betafun import BetaParams, beta_cdf, beta_ppf
from treesmooth.cart import TreeConfig
from treesmooth.dataset import (
    REGISTRY,
    Dataset,
    load_any,
    normalize_name,
    registry_entry,
    validate_against_registry,
)
from treesmooth.errors import (
    CalibrationError,
    DatasetParseError,
    DomainError,
    InvalidInputError,
    TreeSmoothError,
)
from treesmooth.forest import ForestConfig
from treesmooth.harness import ExperimentConfig, ExperimentReport, GridSpec
from treesmooth.regularize import RegularizerSpec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Flags that parse individually but do not fit together."""


# ==================== ARGUMENT TYPES ====================

def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("grid must contain at least one value")
    return values


def _max_features(text: str) -> int | str:
    if text in ("sqrt", "all"):
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("max-features is 'sqrt', 'all' or a positive integer")
    if value < 1:
        raise argparse.ArgumentTypeError("max-features must be positive")
    return value


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="registry name or path to a CSV file")
    parser.add_argument("--data-dir", type=Path, default=None, help="overrides TREESMOOTH_DATA_DIR")


def _add_forest_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("forest")
    group.add_argument("--n-trees", type=int, default=100)
    group.add_argument("--max-depth", type=int, default=None)
    group.add_argument("--min-samples-leaf", type=int, default=1)
    group.add_argument("--max-features", type=_max_features, default="sqrt")
    group.add_argument("--no-bootstrap", action="store_true", help="train every tree on all samples")


def _add_experiment_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--protocol", choices=harness.PROTOCOLS, default="cv")
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--test-fraction", type=float, default=0.3)
    parser.add_argument("--tuning-metric", choices=harness.METRICS, default="balanced_accuracy")
    parser.add_argument("--lambda-grid", type=_float_list, default=None, help="comma-separated lambda values for hs")
    parser.add_argument("--prior-grid", type=_float_list, default=None, help="comma-separated values for alpha and beta")
    parser.add_argument("--tied-prior", action="store_true", help="only try alpha == beta")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes (default TREESMOOTH_JOBS or 1)")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--format", choices=reporting.FORMATS, default=None, help="default follows the --out suffix")


def _add_calibration_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=regularize.KINDS, default="none")
    parser.add_argument("--lambda", dest="lam", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treesmooth",
        description="Random forests with post-hoc leaf regularization and their benchmark protocols.",
    )
    parser.add_argument("--log-level", default=None, help="overrides TREESMOOTH_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    bench = commands.add_parser("bench", help="run one benchmark protocol for one method")
    _add_data_args(bench)
    bench.add_argument("--method", choices=regularize.KINDS, default="beta")
    _add_experiment_args(bench)
    _add_forest_args(bench)
    bench.set_defaults(handler=cmd_bench)

    compare = commands.add_parser("compare", help="run one protocol for several methods with shared seeds")
    _add_data_args(compare)
    compare.add_argument("--methods", default=",".join(regularize.KINDS), help="comma-separated subset of none,hs,beta")
    _add_experiment_args(compare)
    _add_forest_args(compare)
    compare.set_defaults(handler=cmd_compare)

    validate = commands.add_parser("validate-data", help="check datasets against the benchmark registry")
    validate.add_argument("datasets", nargs="+", help="registry names or CSV paths")
    validate.add_argument("--name", default=None, help="registry entry to compare a CSV path with")
    validate.add_argument("--data-dir", type=Path, default=None)
    validate.set_defaults(handler=cmd_validate_data)

    fetch_data = commands.add_parser("fetch-data", help="download the benchmark datasets into the data directory")
    fetch_data.add_argument("datasets", nargs="*", help="registry names (default: all)")
    fetch_data.add_argument("--data-dir", type=Path, default=None)
    fetch_data.add_argument("--force", action="store_true", help="download again even if the file exists")
    fetch_data.set_defaults(handler=cmd_fetch_data)

    dump = commands.add_parser("dump-model", help="fit, optionally calibrate, and save a forest as JSON")
    _add_data_args(dump)
    _add_calibration_args(dump)
    _add_forest_args(dump)
    dump.add_argument("--out", type=Path, required=True)
    dump.set_defaults(handler=cmd_dump_model)

    predict = commands.add_parser("predict", help="write class-1 probabilities as CSV")
    source = predict.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=Path, help="forest JSON written by dump-model")
    source.add_argument("--dataset", help="fit a forest on this dataset first")
    predict.add_argument("--data-dir", type=Path, default=None)
    predict.add_argument("--input", type=Path, default=None, help="CSV of rows to score (default: the training data)")
    predict.add_argument("--out", type=Path, default=None, help="default: standard output")
    _add_calibration_args(predict)
    _add_forest_args(predict)
    predict.set_defaults(handler=cmd_predict)

    betafun = commands.add_parser("betafun-eval", help=argparse.SUPPRESS)
    betafun.add_argument("function", choices=("cdf", "ppf"))
    betafun.add_argument("--alpha", type=float, required=True)
    betafun.add_argument("--beta", type=float, required=True)
    betafun.add_argument("points", type=float, nargs="+")
    betafun.set_defaults(handler=cmd_betafun_eval)
    return parser


# ==================== HELPERS ====================

def _forest_config(args: argparse.Namespace, seed: int = 0) -> ForestConfig:
    try:
        tree = TreeConfig(
            max_depth=args.max_depth,
            min_samples_leaf=args.min_samples_leaf,
            max_features=args.max_features,
        )
        return ForestConfig(n_trees=args.n_trees, tree=tree, bootstrap=not args.no_bootstrap, seed=seed)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


def _grid_for(method: str, args: argparse.Namespace) -> GridSpec:
    if method == "hs" and args.lambda_grid is not None:
        return GridSpec("hs", args.lambda_grid)
    if method == "beta" and args.prior_grid is not None:
        return GridSpec.beta_from_values(args.prior_grid, tied=args.tied_prior)
    return GridSpec.default(method, tied_prior=args.tied_prior)


def _check_grid_flags(methods: Sequence[str], args: argparse.Namespace) -> None:
    if args.lambda_grid is not None and "hs" not in methods:
        raise UsageError("--lambda-grid only applies to the hs method")
    if (args.prior_grid is not None or args.tied_prior) and "beta" not in methods:
        raise UsageError("--prior-grid and --tied-prior only apply to the beta method")


def _experiment_config(args: argparse.Namespace, ds: Dataset, method: str) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig(
            dataset=ds.name,
            method=method,
            grid=_grid_for(method, args),
            folds=args.folds,
            repetitions=args.reps,
            tuning_metric=args.tuning_metric,
            master_seed=args.seed,
            test_fraction=args.test_fraction,
            forest=_forest_config(args),
        )
        cfg.grid.specs()
    except (InvalidInputError, DomainError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _jobs(args: argparse.Namespace) -> int:
    return args.jobs if args.jobs is not None else config.default_jobs()


def _calibration_spec(args: argparse.Namespace) -> RegularizerSpec:
    try:
        return _spec_from_flags(args)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _spec_from_flags(args: argparse.Namespace) -> RegularizerSpec:
    if args.method == "hs":
        if args.lam is None or args.alpha is not None or args.beta is not None:
            raise UsageError("--method hs takes --lambda only")
        return RegularizerSpec.hs(args.lam)
    if args.method == "beta":
        if args.alpha is None or args.beta is None or args.lam is not None:
            raise UsageError("--method beta takes --alpha and --beta")
        return RegularizerSpec.beta_prior(args.alpha, args.beta)
    if args.lam is not None or args.alpha is not None or args.beta is not None:
        raise UsageError("--method none takes no hyperparameters")
    return RegularizerSpec.none()


def _format_stat(stats: dict[str, float]) -> str:
    return f"{stats['mean']:.4f} ± {stats['std']:.4f}"


def _summary_table(reports: Sequence[ExperimentReport]) -> Table:
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Dataset")
    table.add_column("Protocol")
    table.add_column("Method", style="bold")
    table.add_column("Reps", justify="right")
    table.add_column("Balanced accuracy", justify="right")
    table.add_column("ROC-AUC", justify="right")
    for report in reports:
        summary = report.summary
        table.add_row(
            str(report.config["dataset"]),
            report.protocol,
            str(report.config["method"]),
            str(len(report.rows)),
            _format_stat(summary["balanced_accuracy"]),
            _format_stat(summary["roc_auc"]),
        )
    return table


def _read_query_matrix(path: Path, n_features: int) -> np.ndarray:
    """Rows to score: exactly ``n_features`` columns, or that plus a trailing label."""
    frame = pd.read_csv(path, header=0, dtype=str, keep_default_na=False)
    if frame.shape[1] == n_features + 1:
        frame = frame.iloc[:, :n_features]
    elif frame.shape[1] != n_features:
        raise InvalidInputError(
            f"{path} has {frame.shape[1]} columns; the model expects {n_features} features"
        )
    values = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DatasetParseError("non-numeric value", row=int(row) + 2, column=str(frame.columns[col]))
    return values.to_numpy(dtype=np.float64)


# ==================== COMMANDS ====================

def cmd_bench(args: argparse.Namespace, console: Console) -> int:
    _check_grid_flags([args.method], args)
    ds = load_any(args.dataset, args.data_dir)
    cfg = _experiment_config(args, ds, args.method)
    report = harness.run_experiment(cfg, args.protocol, ds=ds, jobs=_jobs(args))
    reporting.write_report(report.to_dict(), args.out, args.format)
    console.print(_summary_table([report]))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, console: Console) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = sorted(set(methods) - set(regularize.KINDS))
    if unknown or not methods:
        raise UsageError(f"--methods must name some of {', '.join(regularize.KINDS)}; got {args.methods!r}")
    _check_grid_flags(methods, args)
    ds = load_any(args.dataset, args.data_dir)
    cfg = _experiment_config(args, ds, "none")
    grids = {method: _grid_for(method, args) for method in methods}
    reports = harness.compare_methods(
        cfg, args.protocol, methods=methods, grids=grids, ds=ds, jobs=_jobs(args)
    )
    reporting.write_report(reporting.comparison_document(reports), args.out, args.format)
    console.print(_summary_table(reports))
    return EXIT_OK


def cmd_validate_data(args: argparse.Namespace, console: Console) -> int:
    if args.name is not None and len(args.datasets) != 1:
        raise UsageError("--name applies to a single dataset")
    status = EXIT_OK
    for item in args.datasets:
        ds = load_any(item, args.data_dir)
        n0, n1 = ds.class_counts()
        console.print(
            f"{ds.name}: {ds.n_samples} samples, {ds.n_features} features, classes {n0}/{n1}",
            highlight=False,
        )
        key = normalize_name(args.name or ds.name)
        if key not in REGISTRY:
            logger.warning("%s has no registry entry; nothing to compare against", ds.name)
            continue
        result = validate_against_registry(ds, registry_entry(key))
        if result:
            console.print(f"{ds.name}: matches the registry", highlight=False)
        else:
            status = EXIT_DATA_ERROR
            for mismatch in result.mismatches:
                console.print(f"{ds.name}: [red]mismatch[/red] {mismatch}", highlight=False)
    return status


def cmd_fetch_data(args: argparse.Namespace, console: Console) -> int:
    names = [registry_entry(name).name for name in args.datasets] or list(REGISTRY)
    for name in names:
        path = fetch.fetch_dataset(name, args.data_dir, force=args.force)
        console.print(f"{name}: {path}", highlight=False)
    return EXIT_OK


def cmd_dump_model(args: argparse.Namespace, console: Console) -> int:
    spec = _calibration_spec(args)
    ds = load_any(args.dataset, args.data_dir)
    fitted = regularize.apply(forest.fit_forest(ds, _forest_config(args, seed=args.seed)), spec)
    forest.save_forest(fitted, args.out)
    logger.info("%d trees on %s (%s) saved to %s", fitted.config.n_trees, ds.name, spec, args.out)
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, console: Console) -> int:
    spec = _calibration_spec(args)
    if args.model is not None:
        fitted = forest.load_forest(args.model)
        if spec.kind != "none":
            fitted = regularize.apply(fitted, spec)
        if args.input is None:
            raise UsageError("--input is required with --model")
        X = _read_query_matrix(args.input, fitted.n_features)
    else:
        ds = load_any(args.dataset, args.data_dir)
        fitted = regularize.apply(forest.fit_forest(ds, _forest_config(args, seed=args.seed)), spec)
        X = ds.features if args.input is None else _read_query_matrix(args.input, fitted.n_features)
    proba = forest.predict_proba(fitted, X)
    frame = pd.DataFrame({"row": np.arange(len(proba)), "proba_class1": proba})
    if args.out is None:
        frame.to_csv(sys.stdout, index=False)
    else:
        frame.to_csv(args.out, index=False, encoding="utf-8")
        logger.info("%d predictions written to %s", len(proba), args.out)
    return EXIT_OK


def cmd_betafun_eval(args: argparse.Namespace, console: Console) -> int:
    params = BetaParams(args.alpha, args.beta)
    fn = beta_cdf if args.function == "cdf" else beta_ppf
    for point in args.points:
        print(repr(float(fn(point, params))))
    return EXIT_OK


# ==================== MAIN ====================

def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config.configure_logging(args.log_level.upper() if args.log_level else None)
    console = Console()
    try:
        return args.handler(args, console)
    except (UsageError, CalibrationError) as exc:
        parser.print_usage(sys.stderr)
        logger.error("%s", exc)
        return EXIT_USAGE
    except (TreeSmoothError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA_ERROR
