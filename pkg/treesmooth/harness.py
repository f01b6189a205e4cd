"""The two benchmark protocols and the grid search they share.

Protocol "cv": tune on the whole dataset with k-fold CV, then report the
mean of a fresh k-fold CV with the tuned hyperparameters.
Protocol "holdout": stratified train/test split, tune on train only, refit
on train, report on test.

Every repetition derives its seeds from (master_seed, repetition index)
alone, so runs are reproducible one repetition at a time and identical
regardless of how many worker processes execute them.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Sequence

import numpy as np

from treesmooth import forest, regularize
from treesmooth.dataset import Dataset, load_any, stratified_kfold, train_test_split
from treesmooth.errors import InvalidInputError, ModelSchemaError
from treesmooth.forest import ForestConfig
from treesmooth.metrics import ScoredPredictions, balanced_accuracy_from_labels, roc_auc_trapezoid
from treesmooth.regularize import RegularizerSpec
from treesmooth.seeding import derive_seed

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

PRIOR_GRID_VALUES = (1500.0, 1000.0, 800.0, 500.0, 100.0, 50.0, 30.0, 10.0, 1.0)
LAMBDA_GRID_VALUES = (0.001, 0.01, 0.1, 1.0, 10.0, 25.0, 50.0, 100.0, 200.0)
METRICS = ("balanced_accuracy", "roc_auc")
PROTOCOLS = ("cv", "holdout")


# ==================== GRID ====================

@dataclass(frozen=True)
class GridSpec:
    """Candidate hyperparameters: lambdas for hs, (alpha, beta) pairs for beta."""

    method: str
    values: tuple = ()

    def __post_init__(self):
        if self.method not in regularize.KINDS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if self.method == "none":
            object.__setattr__(self, "values", ())
            return
        if not self.values:
            raise InvalidInputError(f"{self.method} grid must not be empty")
        if self.method == "beta":
            object.__setattr__(
                self, "values", tuple((float(a), float(b)) for a, b in self.values)
            )
        else:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def default(cls, method: str, tied_prior: bool = False) -> "GridSpec":
        if method == "hs":
            return cls("hs", LAMBDA_GRID_VALUES)
        if method == "beta":
            return cls.beta_from_values(PRIOR_GRID_VALUES, tied=tied_prior)
        return cls(method)

    @classmethod
    def beta_from_values(cls, values: Sequence[float], tied: bool = False) -> "GridSpec":
        """Cartesian product of ``values`` for alpha and beta, or its diagonal if tied."""
        pairs = [(v, v) for v in values] if tied else list(product(values, values))
        return cls("beta", tuple(pairs))

    def specs(self) -> list[RegularizerSpec]:
        if self.method == "hs":
            return [RegularizerSpec.hs(lam) for lam in self.values]
        if self.method == "beta":
            return [RegularizerSpec.beta_prior(a, b) for a, b in self.values]
        return [RegularizerSpec.none()]

    def to_dict(self) -> dict[str, Any]:
        return {"method": self.method, "values": [list(v) if isinstance(v, tuple) else v for v in self.values]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "GridSpec":
        method = doc.get("method", "none")
        values = doc.get("values", [])
        if method == "beta":
            values = [tuple(v) for v in values]
        return cls(method, tuple(values))


@dataclass(frozen=True)
class GridSearchResult:
    best: RegularizerSpec
    mean_scores: tuple[float, ...] = ()

    @property
    def evaluated(self) -> bool:
        return bool(self.mean_scores)


# ==================== CONFIG / REPORT ====================

@dataclass
class ExperimentConfig:
    dataset: str
    method: str = "none"
    grid: GridSpec | None = None
    folds: int = 5
    repetitions: int = 20
    tuning_metric: str = "balanced_accuracy"
    master_seed: int = 0
    test_fraction: float = 0.3
    forest: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self):
        if self.grid is None:
            self.grid = GridSpec.default(self.method)
        if self.grid.method != self.method:
            raise InvalidInputError(f"grid is for {self.grid.method}, method is {self.method}")
        if self.folds < 2:
            raise InvalidInputError("folds must be at least 2")
        if self.repetitions < 1:
            raise InvalidInputError("repetitions must be at least 1")
        if self.tuning_metric not in METRICS:
            raise InvalidInputError(f"tuning metric must be one of {METRICS}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "grid": self.grid.to_dict(),
            "folds": self.folds,
            "repetitions": self.repetitions,
            "tuning_metric": self.tuning_metric,
            "master_seed": self.master_seed,
            "test_fraction": self.test_fraction,
            "forest": self.forest.to_dict(),
        }


@dataclass(frozen=True)
class RepetitionResult:
    rep: int
    chosen: dict[str, float]
    balanced_accuracy: float
    roc_auc: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "rep": self.rep,
            "chosen": dict(self.chosen),
            "balanced_accuracy": self.balanced_accuracy,
            "roc_auc": self.roc_auc,
        }


def summarize(rows: Sequence[RepetitionResult]) -> dict[str, dict[str, float]]:
    """mean / sample std (0 for one row) / min / max of every metric."""
    summary = {}
    for metric in METRICS:
        values = np.array([getattr(row, metric) for row in rows], dtype=np.float64)
        summary[metric] = {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            "min": float(values.min()),
            "max": float(values.max()),
        }
    return summary


@dataclass
class ExperimentReport:
    config: dict[str, Any]
    rows: list[RepetitionResult]
    protocol: str
    notes: list[str] = field(default_factory=list)

    @property
    def summary(self) -> dict[str, dict[str, float]]:
        return summarize(self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": {**self.config, "protocol": self.protocol, "notes": list(self.notes)},
            "rows": [row.to_dict() for row in self.rows],
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentReport":
        if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ModelSchemaError(f"unsupported report schema_version {doc.get('schema_version')!r}")
        try:
            config = dict(doc["config"])
            protocol = config.pop("protocol")
            notes = config.pop("notes", [])
            rows = [
                RepetitionResult(
                    rep=int(r["rep"]),
                    chosen=dict(r["chosen"]),
                    balanced_accuracy=float(r["balanced_accuracy"]),
                    roc_auc=float(r["roc_auc"]),
                )
                for r in doc["rows"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelSchemaError(f"bad report document: {exc}") from exc
        return cls(config=config, rows=rows, protocol=protocol, notes=list(notes))


def _notes(protocol: str) -> list[str]:
    notes = [
        "forest hyperparameters are package defaults, not tuned per dataset",
        "cross-validation folds are stratified",
    ]
    if protocol == "cv":
        notes.append(
            "hyperparameters are tuned on the full dataset before the reported CV, "
            "so tuning information leaks into the reported scores"
        )
    return notes


# ==================== EVALUATION ====================

def score(metric: str, labels: np.ndarray, proba: np.ndarray) -> float:
    if metric == "balanced_accuracy":
        return balanced_accuracy_from_labels(labels, forest.labels_from_proba(proba))
    if metric == "roc_auc":
        return roc_auc_trapezoid(ScoredPredictions(proba, labels))
    raise InvalidInputError(f"unknown metric {metric!r}")


def _fold_forest_config(base: ForestConfig, seed: int) -> ForestConfig:
    return dataclasses.replace(base, seed=seed)


def grid_search_cv(
    train: Dataset,
    grid: GridSpec,
    folds: int,
    metric: str,
    seed: int,
    forest_config: ForestConfig | None = None,
) -> GridSearchResult:
    """Pick the grid point with the best mean held-out score; earliest wins ties.

    Fold f uses a forest seeded with derive_seed(seed, f). Calibration is
    post-hoc, so that one forest serves every grid point of the fold.
    """
    specs = grid.specs()
    if len(specs) == 1:
        return GridSearchResult(best=specs[0])
    forest_config = forest_config or ForestConfig()
    assignment = stratified_kfold(train, folds, seed)
    totals = np.zeros(len(specs))
    for fold, (train_idx, test_idx) in enumerate(assignment.splits()):
        fitted = forest.fit_forest(
            train.subset(train_idx), _fold_forest_config(forest_config, derive_seed(seed, fold))
        )
        held_out = train.subset(test_idx)
        work = copy.deepcopy(fitted.trees)
        routes = forest.route_leaves(work, held_out.features)
        for i, spec in enumerate(specs):
            regularize.calibrate_trees(work, spec)
            proba = forest.average_tree_outputs(forest.leaf_values(routes))
            totals[i] += score(metric, held_out.labels, proba)
    means = totals / folds
    best = int(np.argmax(means))
    logger.debug(
        "grid search over %d %s points: best %s (%.4f)", len(specs), grid.method, specs[best], means[best]
    )
    return GridSearchResult(best=specs[best], mean_scores=tuple(float(m) for m in means))


def evaluate_split(
    train: Dataset, test: Dataset, spec: RegularizerSpec, forest_config: ForestConfig
) -> tuple[float, float]:
    """Fit on ``train``, calibrate with ``spec``, return (balanced accuracy, ROC-AUC) on ``test``."""
    fitted = regularize.apply(forest.fit_forest(train, forest_config), spec)
    proba = forest.predict_proba(fitted, test.features)
    return (
        score("balanced_accuracy", test.labels, proba),
        score("roc_auc", test.labels, proba),
    )


def run_repetition(cfg: ExperimentConfig, ds: Dataset, rep: int, protocol: str) -> RepetitionResult:
    """One repetition of ``protocol``; depends only on (cfg, ds, rep)."""
    if protocol not in PROTOCOLS:
        raise InvalidInputError(f"unknown protocol {protocol!r}")
    seed_r = derive_seed(cfg.master_seed, rep)
    if protocol == "cv":
        tuned = grid_search_cv(
            ds, cfg.grid, cfg.folds, cfg.tuning_metric, derive_seed(seed_r, 0), cfg.forest
        )
        assignment = stratified_kfold(ds, cfg.folds, derive_seed(seed_r, 1))
        forest_seeds = derive_seed(seed_r, 2)
        scores = [
            evaluate_split(
                ds.subset(train_idx),
                ds.subset(test_idx),
                tuned.best,
                _fold_forest_config(cfg.forest, derive_seed(forest_seeds, fold)),
            )
            for fold, (train_idx, test_idx) in enumerate(assignment.splits())
        ]
        ba, auc = np.mean(scores, axis=0)
    else:
        train, test = train_test_split(ds, cfg.test_fraction, derive_seed(seed_r, 0))
        tuned = grid_search_cv(
            train, cfg.grid, cfg.folds, cfg.tuning_metric, derive_seed(seed_r, 1), cfg.forest
        )
        ba, auc = evaluate_split(
            train, test, tuned.best, _fold_forest_config(cfg.forest, derive_seed(seed_r, 2))
        )
    result = RepetitionResult(
        rep=rep,
        chosen=tuned.best.hyperparameters(),
        balanced_accuracy=float(ba),
        roc_auc=float(auc),
    )
    logger.info(
        "%s %s %s rep %d: balanced accuracy %.4f, ROC-AUC %.4f, chosen %s",
        ds.name, protocol, cfg.method, rep, result.balanced_accuracy, result.roc_auc, tuned.best,
    )
    return result


def _repetition_job(args: tuple[ExperimentConfig, Dataset, int, str]) -> RepetitionResult:
    return run_repetition(*args)


def _run(cfg: ExperimentConfig, ds: Dataset | None, protocol: str, jobs: int) -> ExperimentReport:
    ds = ds if ds is not None else load_any(cfg.dataset)
    logger.info(
        "%s protocol on %s: method %s, %d repetitions, %d folds",
        protocol, ds.name, cfg.method, cfg.repetitions, cfg.folds,
    )
    jobs_list = [(cfg, ds, rep, protocol) for rep in range(cfg.repetitions)]
    if jobs > 1 and cfg.repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map keeps repetition order whatever the completion order
            rows = list(pool.map(_repetition_job, jobs_list))
    else:
        rows = [_repetition_job(args) for args in jobs_list]
    return ExperimentReport(config=cfg.to_dict(), rows=rows, protocol=protocol, notes=_notes(protocol))


def experiment_cv(cfg: ExperimentConfig, ds: Dataset | None = None, jobs: int = 1) -> ExperimentReport:
    return _run(cfg, ds, "cv", jobs)


def experiment_holdout(
    cfg: ExperimentConfig, ds: Dataset | None = None, jobs: int = 1
) -> ExperimentReport:
    return _run(cfg, ds, "holdout", jobs)


def run_experiment(
    cfg: ExperimentConfig, protocol: str, ds: Dataset | None = None, jobs: int = 1
) -> ExperimentReport:
    if protocol not in PROTOCOLS:
        raise InvalidInputError(f"unknown protocol {protocol!r}")
    return _run(cfg, ds, protocol, jobs)


def compare_methods(
    cfg: ExperimentConfig,
    protocol: str,
    methods: Sequence[str] = regularize.KINDS,
    grids: dict[str, GridSpec] | None = None,
    ds: Dataset | None = None,
    jobs: int = 1,
) -> list[ExperimentReport]:
    """Run the same protocol per method; a shared master seed means shared splits and forests."""
    ds = ds if ds is not None else load_any(cfg.dataset)
    grids = grids or {}
    reports = []
    for method in methods:
        grid = grids.get(method) or GridSpec.default(method)
        method_cfg = dataclasses.replace(cfg, method=method, grid=grid)
        reports.append(run_experiment(method_cfg, protocol, ds=ds, jobs=jobs))
    return reports
