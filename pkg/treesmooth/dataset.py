"""CSV ingestion, the benchmark registry, and deterministic stratified splits."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from treesmooth import config
from treesmooth.errors import (
    DatasetParseError,
    InfeasibleSplitError,
    UnsupportedDatasetError,
)
from treesmooth.seeding import make_rng

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"


# ==================== TYPES ====================

def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus binary labels. Immutable once built."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str
    sample_ids: np.ndarray | None = None
    label_values: tuple[str, str] = ("0", "1")
    label_name: str = "label"

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise DatasetParseError("features must be a 2-D matrix")
        if labels.shape != (features.shape[0],):
            raise DatasetParseError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if not np.isin(labels, (0, 1)).all():
            raise UnsupportedDatasetError("labels must be exactly 0 or 1")
        if np.isnan(features).any():
            raise DatasetParseError("missing feature values are not permitted")
        if len(self.feature_names) != features.shape[1]:
            raise DatasetParseError(
                f"{len(self.feature_names)} feature names for {features.shape[1]} columns"
            )
        ids = np.arange(features.shape[0]) if self.sample_ids is None else self.sample_ids
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))
        object.__setattr__(self, "sample_ids", _frozen(np.asarray(ids, dtype=np.int64)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        return self.n_samples - n1, n1

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows at ``indices`` (positions in this dataset), provenance kept."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            feature_names=self.feature_names,
            name=self.name,
            sample_ids=self.sample_ids[indices],
            label_values=self.label_values,
            label_name=self.label_name,
        )


@dataclass(frozen=True)
class DatasetRegistryEntry:
    name: str
    expected_samples: int
    expected_features: int
    expected_class0: int
    expected_class1: int
    file: str = ""
    source: str = ""

    @property
    def class_total(self) -> int:
        return self.expected_class0 + self.expected_class1

    def accepts_sample_count(self, n: int) -> bool:
        """The published total, or the class-count sum when rows with missing cells were dropped."""
        return n in (self.expected_samples, self.class_total)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    mismatches: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_index_per_sample: np.ndarray
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index_per_sample == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index_per_sample != fold)

    def splits(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """(train positions, test positions) for every fold in order."""
        for fold in range(self.k):
            yield self.train_indices(fold), self.test_indices(fold)


# Published shapes of the benchmark datasets. Class columns are compared as an unordered pair.
# breast_cancer lists 286 rows but classes 196/81: the 9 rows with missing cells are gone.
REGISTRY: dict[str, DatasetRegistryEntry] = {
    entry.name: entry
    for entry in (
        DatasetRegistryEntry("breast_cancer", 286, 9, 196, 81, "breast_cancer.csv", "uci"),
        DatasetRegistryEntry("haberman", 306, 3, 81, 225, "haberman.csv", "pmlb"),
        DatasetRegistryEntry("heart", 270, 15, 150, 120, "heart.csv", "imodels"),
        DatasetRegistryEntry("diabetes", 768, 8, 500, 268, "diabetes.csv", "pmlb"),
    )
}

_ALIASES = {"habermann": "haberman", "breast": "breast_cancer"}


def normalize_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    return _ALIASES.get(key, key)


def registry_entry(name: str) -> DatasetRegistryEntry:
    key = normalize_name(name)
    if key not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise UnsupportedDatasetError(f"unknown dataset {name!r}; registry has: {known}")
    return REGISTRY[key]


# ==================== CSV ====================

def _sorted_label_values(raw: Sequence[str]) -> list[str]:
    values = list(raw)
    numeric = pd.to_numeric(pd.Series(values), errors="coerce")
    if numeric.notna().all():
        order = np.argsort(numeric.to_numpy(), kind="stable")
        return [values[i] for i in order]
    return sorted(values)


def _check_row_widths(path: Path) -> tuple[list[str], list[int]]:
    """Header plus the file line of every data row; fails on the first row of the wrong width."""
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DatasetParseError(f"{path} is empty")
        lines = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetParseError(
                    f"wrong number of columns: expected {len(header)}, saw {len(row)}",
                    row=reader.line_num,
                )
            lines.append(reader.line_num)
    return header, lines


def load_csv(path: str | Path, name: str | None = None) -> Dataset:
    """Parse a header-first CSV whose last column is the binary label.

    Row numbers in parse errors are 1-based file lines, the header being line 1.
    """
    path = Path(path)
    columns, lines = _check_row_widths(path)
    if len(columns) < 2:
        raise DatasetParseError(f"{path} needs at least one feature and a label column")

    raw = pd.read_csv(
        path,
        header=0,
        index_col=False,
        dtype=str,
        keep_default_na=False,
        skip_blank_lines=True,
        encoding="utf-8",
    )
    raw.columns = columns

    feature_cols, label_col = columns[:-1], columns[-1]
    features = np.empty((len(raw), len(feature_cols)), dtype=np.float64)
    for j, col in enumerate(feature_cols):
        cells = raw[col].str.strip()
        parsed = pd.to_numeric(cells, errors="coerce")
        bad = (parsed.isna() | (cells == "")).to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            problem = "missing value" if cells.iloc[row] == "" else "non-numeric value"
            raise DatasetParseError(
                f"{problem} {cells.iloc[row]!r}", row=lines[row], column=col
            )
        # float() rounds correctly; the pandas fast parser can be off by an ulp
        features[:, j] = np.fromiter((float(v) for v in cells), dtype=np.float64, count=len(cells))

    label_cells = raw[label_col].str.strip()
    distinct = label_cells.unique().tolist()
    if len(distinct) != 2:
        raise UnsupportedDatasetError(
            f"label column {label_col!r} has {len(distinct)} distinct values {sorted(distinct)[:5]}; "
            "binary classification needs exactly 2"
        )
    low, high = _sorted_label_values(distinct)
    labels = (label_cells == high).to_numpy().astype(np.int64)

    ds = Dataset(
        features=features,
        labels=labels,
        feature_names=tuple(feature_cols),
        name=name or path.stem,
        label_values=(low, high),
        label_name=label_col,
    )
    logger.debug("loaded %s: %d samples, %d features", ds.name, ds.n_samples, ds.n_features)
    return ds


def write_csv(ds: Dataset, path: str | Path) -> Path:
    """Write ``ds`` so that ``load_csv`` reproduces it."""
    path = Path(path)
    frame = pd.DataFrame(ds.features, columns=list(ds.feature_names))
    frame[ds.label_name] = ds.labels
    frame.to_csv(path, index=False, encoding="utf-8")
    return path


def read_manifest(directory: Path | None = None) -> pd.DataFrame:
    directory = Path(directory) if directory is not None else config.data_dir()
    manifest = directory / MANIFEST_NAME
    if not manifest.exists():
        raise UnsupportedDatasetError(f"no {MANIFEST_NAME} in {directory}")
    return pd.read_csv(manifest, dtype={"name": str, "file": str, "source": str})


def dataset_path(name: str, directory: Path | None = None) -> Path:
    directory = Path(directory) if directory is not None else config.data_dir()
    entry = registry_entry(name)
    file = entry.file
    manifest = directory / MANIFEST_NAME
    if manifest.exists():
        rows = read_manifest(directory)
        match = rows[rows["name"].map(normalize_name) == entry.name]
        if not match.empty:
            file = match["file"].iloc[0]
    return directory / file


def load_registered(name: str, directory: Path | None = None) -> Dataset:
    """Load one of the bundled benchmark datasets by registry name."""
    entry = registry_entry(name)
    path = dataset_path(name, directory)
    if not path.exists():
        raise UnsupportedDatasetError(f"dataset file for {entry.name!r} not found at {path}")
    return load_csv(path, name=entry.name)


def load_any(name_or_path: str, directory: Path | None = None) -> Dataset:
    """Registry name if it is one, otherwise a CSV path."""
    if normalize_name(name_or_path) in REGISTRY:
        return load_registered(name_or_path, directory)
    path = Path(name_or_path)
    if path.suffix.lower() == ".csv" or path.exists():
        return load_csv(path)
    return load_registered(name_or_path, directory)


def validate_against_registry(ds: Dataset, entry: DatasetRegistryEntry) -> ValidationResult:
    """Compare dimensions and the unordered class-count pair with ``entry``."""
    mismatches = []
    if not entry.accepts_sample_count(ds.n_samples):
        expected_n = sorted({entry.expected_samples, entry.class_total})
        mismatches.append(f"samples: expected {' or '.join(map(str, expected_n))}, got {ds.n_samples}")
    if ds.n_features != entry.expected_features:
        mismatches.append(f"features: expected {entry.expected_features}, got {ds.n_features}")
    expected = sorted((entry.expected_class0, entry.expected_class1))
    got = sorted(ds.class_counts())
    if got != expected:
        mismatches.append(f"class counts: expected {expected}, got {got}")
    return ValidationResult(ok=not mismatches, mismatches=tuple(mismatches))


# ==================== SPLITS ====================

def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldAssignment:
    """Shuffle each class with ``seed`` and deal samples round-robin into k folds.

    Class 0 is dealt first and class 1 continues where it stopped, so fold
    sizes differ by at most one as well as per-class counts.
    """
    if k < 2:
        raise InfeasibleSplitError(f"k must be at least 2, got {k}")
    rng = make_rng(seed)
    folds = np.empty(ds.n_samples, dtype=np.int64)
    position = 0
    for label in (0, 1):
        members = np.flatnonzero(ds.labels == label)
        if len(members) < k:
            raise InfeasibleSplitError(
                f"class {label} has {len(members)} samples, fewer than k={k}"
            )
        members = rng.permutation(members)
        folds[members] = (position + np.arange(len(members))) % k
        position += len(members)
    return FoldAssignment(fold_index_per_sample=_frozen(folds), k=k)


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified split; each class contributes round(n_c * fraction) test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise InfeasibleSplitError(f"test fraction must lie in (0, 1), got {test_fraction}")
    rng = make_rng(seed)
    test_parts = []
    for label in (0, 1):
        members = np.flatnonzero(ds.labels == label)
        n_test = int(np.floor(len(members) * test_fraction + 0.5))
        if n_test == 0 or n_test >= len(members):
            raise InfeasibleSplitError(
                f"fraction {test_fraction} leaves class {label} empty in "
                f"{'test' if n_test == 0 else 'train'} ({len(members)} samples)"
            )
        test_parts.append(rng.permutation(members)[:n_test])
    test_idx = np.sort(np.concatenate(test_parts))
    train_mask = np.ones(ds.n_samples, dtype=bool)
    train_mask[test_idx] = False
    return ds.subset(np.flatnonzero(train_mask)), ds.subset(test_idx)
