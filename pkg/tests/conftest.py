"""Shared fixtures: synthetic datasets, CSV writers and hand-built trees."""

from pathlib import Path

import numpy as np
import pytest

from treesmooth import config
from treesmooth.cart import TreeConfig, TreeNode
from treesmooth.dataset import REGISTRY, Dataset, dataset_path, write_csv
from treesmooth.forest import ForestConfig


def make_dataset(features, labels, name="synthetic") -> Dataset:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    names = tuple(f"x{j}" for j in range(features.shape[1]))
    return Dataset(features=features, labels=np.asarray(labels), feature_names=names, name=name)


def blobs(n0=40, n1=30, n_features=3, shift=1.0, seed=0, name="blobs") -> Dataset:
    """Two overlapping Gaussian classes; continuous, so no duplicate rows."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0.0, 1.0, size=(n0, n_features))
    X1 = rng.normal(shift, 1.0, size=(n1, n_features))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    order = rng.permutation(len(y))
    return make_dataset(X[order], y[order], name=name)


def small_forest(n_trees=5, seed=0) -> ForestConfig:
    return ForestConfig(n_trees=n_trees, tree=TreeConfig(max_features="sqrt"), seed=seed)


@pytest.fixture
def blobs_ds() -> Dataset:
    return blobs()


@pytest.fixture
def xor_ds() -> Dataset:
    return make_dataset([[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0], name="xor")


@pytest.fixture
def write_text(tmp_path):
    """Write ``text`` to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def blobs_csv(tmp_path, blobs_ds) -> Path:
    return write_csv(blobs_ds, tmp_path / "blobs.csv")


@pytest.fixture
def stump() -> TreeNode:
    """Root (6, 4) split on feature 0 at 2.5 into (4, 1) and (2, 3)."""
    root = TreeNode(
        n0=6,
        n1=4,
        split_feature=0,
        split_threshold=2.5,
        left=TreeNode(n0=4, n1=1),
        right=TreeNode(n0=2, n1=3),
    )
    root.n_features = 1
    return root


@pytest.fixture
def three_level_tree() -> TreeNode:
    """Balanced root, a class-1 heavy child and a pure class-1 leaf below it."""
    pure = TreeNode(n0=0, n1=5)
    mixed = TreeNode(n0=2, n1=3)
    child = TreeNode(n0=2, n1=8, split_feature=1, split_threshold=0.0, left=pure, right=mixed)
    other = TreeNode(n0=8, n1=2)
    root = TreeNode(n0=10, n1=10, split_feature=0, split_threshold=0.0, left=child, right=other)
    root.n_features = 2
    return root


@pytest.fixture
def isolated_data_dir(tmp_path, monkeypatch) -> Path:
    """Empty data directory wired in through TREESMOOTH_DATA_DIR."""
    directory = tmp_path / "data"
    directory.mkdir()
    monkeypatch.setenv("TREESMOOTH_DATA_DIR", str(directory))
    return directory


def registered_or_skip(name: str) -> Path:
    path = dataset_path(name, config.data_dir())
    if not path.exists():
        pytest.skip(f"{REGISTRY[name].file} not present in {config.data_dir()}")
    return path
