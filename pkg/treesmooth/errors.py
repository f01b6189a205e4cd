"""Exception hierarchy shared by every treesmooth module."""

from __future__ import annotations


class TreeSmoothError(Exception):
    """Base class for all errors raised by treesmooth."""


# ==================== DATA ====================

class DatasetError(TreeSmoothError):
    """Problems with a dataset file or its contents."""


class DatasetParseError(DatasetError):
    """A CSV row or cell could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class FetchError(DatasetError):
    """A benchmark dataset could not be downloaded or did not match the registry."""


class UnsupportedDatasetError(DatasetError):
    """The dataset is not a binary classification problem, or is unknown."""


class InfeasibleSplitError(DatasetError):
    """Stratified folds or a train/test split cannot be formed."""


# ==================== MODELS ====================

class InvalidInputError(TreeSmoothError, ValueError):
    """Bad arguments to fitting or prediction (empty indices, wrong width)."""


class DomainError(TreeSmoothError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CalibrationError(TreeSmoothError):
    """A forest was calibrated more than once."""


class UndefinedMetricError(TreeSmoothError, ValueError):
    """A metric needs both classes but one is absent."""


class ModelSchemaError(TreeSmoothError):
    """A model or report document does not match its schema."""
