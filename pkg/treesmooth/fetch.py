"""Download the benchmark datasets and store them in the CSV layout ``load_csv`` reads.

Each source is parsed into a frame of numeric features with the label last,
written next to the other datasets, and kept only if it passes the registry
check.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import pandas as pd
import requests

from treesmooth import config
from treesmooth.dataset import dataset_path, load_csv, registry_entry, validate_against_registry
from treesmooth.errors import DatasetError, FetchError

logger = logging.getLogger(__name__)

FETCH_TIMEOUT = 60

_PMLB_URL = "https://github.com/EpistasisLab/pmlb/raw/master/datasets/{name}/{name}.tsv.gz"
_IMODELS_URL = "https://raw.githubusercontent.com/csinva/imodels-data/master/data_cleaned/{name}.csv"
_UCI_BREAST_CANCER_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer/breast-cancer.data"
)

_BREAST_CANCER_COLUMNS = [
    "class", "age", "menopause", "tumor_size", "inv_nodes", "node_caps",
    "deg_malig", "breast", "breast_quad", "irradiat",
]
# interval columns keep their lower bound, so the encoding stays ordinal
_BREAST_CANCER_INTERVALS = ("age", "tumor_size", "inv_nodes")
_BREAST_CANCER_CATEGORIES = {
    "menopause": ["premeno", "lt40", "ge40"],
    "node_caps": ["no", "yes"],
    "breast": ["left", "right"],
    "breast_quad": ["left_up", "left_low", "right_up", "right_low", "central"],
    "irradiat": ["no", "yes"],
}


def parse_pmlb(content: bytes) -> pd.DataFrame:
    frame = pd.read_csv(io.BytesIO(content), sep="\t", compression="gzip")
    if "target" not in frame.columns:
        raise FetchError("pmlb table has no 'target' column")
    return frame[[c for c in frame.columns if c != "target"] + ["target"]]


def parse_imodels(content: bytes) -> pd.DataFrame:
    """imodels cleaned tables are already numeric with the label last."""
    return pd.read_csv(io.BytesIO(content))


def parse_uci_breast_cancer(content: bytes) -> pd.DataFrame:
    """Ordinal-encode the raw UCI file; rows with a '?' cell are dropped."""
    raw = pd.read_csv(
        io.BytesIO(content),
        header=None,
        names=_BREAST_CANCER_COLUMNS,
        dtype=str,
        na_values="?",
        keep_default_na=False,
        skipinitialspace=True,
    )
    raw = raw.apply(lambda col: col.str.strip())
    complete = raw.dropna().reset_index(drop=True)
    dropped = len(raw) - len(complete)
    if dropped:
        logger.info("breast cancer: dropped %d rows with missing cells", dropped)

    frame = pd.DataFrame(index=complete.index)
    for col in _BREAST_CANCER_COLUMNS[1:]:
        if col in _BREAST_CANCER_INTERVALS:
            frame[col] = pd.to_numeric(complete[col].str.split("-").str[0], errors="coerce")
        elif col in _BREAST_CANCER_CATEGORIES:
            codes = pd.Categorical(complete[col], categories=_BREAST_CANCER_CATEGORIES[col]).codes
            frame[col] = pd.Series(codes, index=complete.index).where(codes >= 0)
        else:
            frame[col] = pd.to_numeric(complete[col], errors="coerce")
        if frame[col].isna().any():
            bad = complete.loc[frame[col].isna(), col].iloc[0]
            raise FetchError(f"breast cancer: unexpected {col} value {bad!r}")
        frame[col] = frame[col].astype(int)
    frame["recurrence"] = (complete["class"] == "recurrence-events").astype(int)
    return frame


@dataclass(frozen=True)
class DatasetSource:
    url: str
    parse: Callable[[bytes], pd.DataFrame]


SOURCES: dict[str, DatasetSource] = {
    "breast_cancer": DatasetSource(_UCI_BREAST_CANCER_URL, parse_uci_breast_cancer),
    "haberman": DatasetSource(_PMLB_URL.format(name="haberman"), parse_pmlb),
    "heart": DatasetSource(_IMODELS_URL.format(name="heart"), parse_imodels),
    "diabetes": DatasetSource(_PMLB_URL.format(name="diabetes"), parse_pmlb),
}


def download(url: str) -> bytes:
    try:
        response = requests.get(url, timeout=FETCH_TIMEOUT)
        response.raise_for_status()
    except requests.RequestException as exc:
        raise FetchError(f"download of {url} failed: {exc}") from exc
    return response.content


def fetch_dataset(name: str, directory: Path | None = None, force: bool = False) -> Path:
    """Download ``name`` into ``directory`` unless its file is already there.

    The file is written only after the parsed table matches the registry.
    """
    entry = registry_entry(name)
    directory = Path(directory) if directory is not None else config.data_dir()
    path = dataset_path(entry.name, directory)
    if path.exists() and not force:
        logger.info("%s already present at %s", entry.name, path)
        return path

    source = SOURCES[entry.name]
    logger.info("downloading %s from %s", entry.name, source.url)
    content = download(source.url)
    try:
        frame = source.parse(content)
    except FetchError:
        raise
    except (ValueError, OSError, EOFError) as exc:
        raise FetchError(f"{entry.name}: could not parse {source.url}: {exc}") from exc

    directory.mkdir(parents=True, exist_ok=True)
    staging = path.with_name(path.name + ".part")
    frame.to_csv(staging, index=False, encoding="utf-8")
    try:
        result = validate_against_registry(load_csv(staging, name=entry.name), entry)
    except DatasetError as exc:
        staging.unlink()
        raise FetchError(f"{entry.name}: downloaded table is unusable: {exc}") from exc
    if not result:
        staging.unlink()
        raise FetchError(f"{entry.name}: downloaded table does not match the registry: {'; '.join(result.mismatches)}")
    staging.replace(path)
    logger.info("%s written to %s (%d rows)", entry.name, path, len(frame))
    return path
