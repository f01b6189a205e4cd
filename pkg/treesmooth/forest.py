"""Bootstrap-aggregated forests of CART trees with soft-vote averaging."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from treesmooth import cart
from treesmooth.cart import TreeConfig, TreeNode
from treesmooth.dataset import Dataset
from treesmooth.errors import InvalidInputError, ModelSchemaError
from treesmooth.regularize import RegularizerSpec
from treesmooth.seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1


@dataclass
class ForestConfig:
    n_trees: int = 100
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_features="sqrt"))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidInputError("n_trees must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "tree": self.tree.to_dict(),
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ForestConfig":
        return cls(
            n_trees=int(doc["n_trees"]),
            tree=TreeConfig.from_dict(doc.get("tree", {})),
            bootstrap=bool(doc.get("bootstrap", True)),
            seed=int(doc.get("seed", 0)),
        )


@dataclass
class FittedForest:
    trees: list[TreeNode]
    inbag_indices: list[np.ndarray]
    config: ForestConfig
    n_features: int
    feature_names: tuple[str, ...] = ()
    calibration: RegularizerSpec = field(default_factory=RegularizerSpec.none)

    def __post_init__(self):
        if not (len(self.trees) == len(self.inbag_indices) == self.config.n_trees):
            raise InvalidInputError("tree count, in-bag lists and n_trees disagree")


# ==================== FITTING ====================

def fit_forest(ds: Dataset, cfg: ForestConfig) -> FittedForest:
    """Fit ``cfg.n_trees`` trees; tree t draws everything from derive_seed(cfg.seed, t)."""
    n0, n1 = ds.class_counts()
    if n0 == 0 or n1 == 0:
        raise InvalidInputError(f"dataset {ds.name!r} has a single class; cannot fit a forest")
    trees, inbag = [], []
    n = ds.n_samples
    for t in range(cfg.n_trees):
        tree_seed = derive_seed(cfg.seed, t)
        if cfg.bootstrap:
            indices = np.sort(make_rng(tree_seed).integers(0, n, size=n))
        else:
            indices = np.arange(n)
        tree_cfg = dataclasses.replace(cfg.tree, rng_seed=derive_seed(tree_seed, 1))
        trees.append(cart.fit_tree(ds, indices, tree_cfg))
        inbag.append(indices)
    logger.debug("fitted %d trees on %s (%d samples)", cfg.n_trees, ds.name, n)
    return FittedForest(
        trees=trees,
        inbag_indices=inbag,
        config=cfg,
        n_features=ds.n_features,
        feature_names=ds.feature_names,
    )


# ==================== PREDICTION ====================

def _check_width(forest: FittedForest, width: int) -> None:
    if width != forest.n_features:
        raise InvalidInputError(
            f"input has {width} features, forest was trained on {forest.n_features}"
        )


def average_tree_outputs(per_tree: np.ndarray) -> np.ndarray:
    """Mean over axis 0, computed as min + mean offset so identical rows average exactly."""
    per_tree = np.asarray(per_tree, dtype=np.float64)
    low = per_tree.min(axis=0)
    high = per_tree.max(axis=0)
    mean = low + (per_tree - low).sum(axis=0) / per_tree.shape[0]
    return np.clip(mean, low, high)


def route_leaves(trees: Sequence[TreeNode], X: np.ndarray) -> list[np.ndarray]:
    """Per tree, the leaf object each row of ``X`` lands in."""
    return [cart.route_to_leaves(root, X) for root in trees]


def leaf_values(routes: Sequence[np.ndarray]) -> np.ndarray:
    """Current leaf values for cached routes, shape (n_trees, n_rows)."""
    return np.array(
        [[leaf.leaf_value for leaf in per_tree] for per_tree in routes], dtype=np.float64
    ).reshape(len(routes), -1)


def predict_proba(forest: FittedForest, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("expected a 2-D feature matrix")
    _check_width(forest, X.shape[1])
    if X.shape[0] == 0:
        return np.empty(0)
    per_tree = np.stack([cart.predict_proba_tree_batch(root, X) for root in forest.trees])
    return average_tree_outputs(per_tree)


def predict_proba_forest(forest: FittedForest, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("query must be a single feature vector")
    _check_width(forest, x.shape[0])
    per_tree = np.array([[cart.predict_proba_tree(root, x)] for root in forest.trees])
    return float(average_tree_outputs(per_tree)[0])


def labels_from_proba(proba: np.ndarray) -> np.ndarray:
    """Class 1 iff probability >= 0.5."""
    return (np.asarray(proba) >= 0.5).astype(np.int64)


def predict_label(forest: FittedForest, x: Sequence[float]) -> int:
    return int(predict_proba_forest(forest, x) >= 0.5)


def predict_labels(forest: FittedForest, X: np.ndarray) -> np.ndarray:
    return labels_from_proba(predict_proba(forest, X))


# ==================== JSON ====================

def forest_to_dict(forest: FittedForest) -> dict[str, Any]:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "config": forest.config.to_dict(),
        "calibration": forest.calibration.to_dict(),
        "n_features": forest.n_features,
        "feature_names": list(forest.feature_names),
        "inbag_indices": [idx.tolist() for idx in forest.inbag_indices],
        "trees": [cart.tree_to_dict(root) for root in forest.trees],
    }


def forest_from_dict(doc: dict[str, Any]) -> FittedForest:
    if not isinstance(doc, dict):
        raise ModelSchemaError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelSchemaError(f"unsupported model schema_version {version!r}")
    missing = {"config", "n_features", "trees", "inbag_indices"} - doc.keys()
    if missing:
        raise ModelSchemaError(f"model document lacks {sorted(missing)}")
    try:
        config = ForestConfig.from_dict(doc["config"])
        n_features = int(doc["n_features"])
    except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
        raise ModelSchemaError(f"bad forest config: {exc}") from exc
    trees = [cart.tree_from_dict(tree, n_features=n_features) for tree in doc["trees"]]
    try:
        return FittedForest(
            trees=trees,
            inbag_indices=[np.asarray(idx, dtype=np.int64) for idx in doc["inbag_indices"]],
            config=config,
            n_features=n_features,
            feature_names=tuple(doc.get("feature_names", ())),
            calibration=RegularizerSpec.from_dict(doc.get("calibration") or {}),
        )
    except InvalidInputError as exc:
        raise ModelSchemaError(str(exc)) from exc


def save_forest(forest: FittedForest, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(forest_to_dict(forest)), encoding="utf-8")
    return path


def load_forest(path: str | Path) -> FittedForest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelSchemaError(f"{path} is not valid JSON: {exc}") from exc
    return forest_from_dict(doc)
