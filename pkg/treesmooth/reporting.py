"""Report documents as tables: JSON/CSV emission and Excel export."""

from __future__ import annotations

import io
import json
import logging
from pathlib import Path
from typing import Any, Mapping, Sequence

import pandas as pd

from treesmooth.errors import ModelSchemaError
from treesmooth.harness import METRICS, REPORT_SCHEMA_VERSION, ExperimentReport

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
HYPERPARAMETER_COLUMNS = ("lambda", "alpha", "beta")
EXCEL_MIME = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"


def comparison_document(reports: Sequence[ExperimentReport]) -> dict[str, Any]:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "reports": [report.to_dict() for report in reports],
    }


def _reports_in(doc: Mapping[str, Any]) -> list[Mapping[str, Any]]:
    if not isinstance(doc, Mapping) or doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ModelSchemaError("not a treesmooth report document (schema_version missing or unsupported)")
    if "reports" in doc:
        return list(doc["reports"])
    if "rows" in doc:
        return [doc]
    raise ModelSchemaError("report document has neither rows nor reports")


def load_document(source: str | Path | bytes) -> dict[str, Any]:
    """Parse a report or comparison document from a path or raw bytes."""
    try:
        text = source.decode("utf-8") if isinstance(source, bytes) else Path(source).read_text(encoding="utf-8")
        doc = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelSchemaError(f"report is not valid JSON: {exc}") from exc
    _reports_in(doc)
    return doc


def report_frame(doc: Mapping[str, Any]) -> pd.DataFrame:
    """One row per (method, repetition), hyperparameters spread into columns."""
    records = []
    for report in _reports_in(doc):
        try:
            cfg = report["config"]
            for row in report["rows"]:
                record = {
                    "dataset": cfg["dataset"],
                    "protocol": cfg["protocol"],
                    "method": cfg["method"],
                    "rep": row["rep"],
                }
                for key in HYPERPARAMETER_COLUMNS:
                    record[key] = row["chosen"].get(key)
                for metric in METRICS:
                    record[metric] = row[metric]
                records.append(record)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ModelSchemaError(f"report row is malformed: {exc}") from exc
    columns = ["dataset", "protocol", "method", "rep", *HYPERPARAMETER_COLUMNS, *METRICS]
    return pd.DataFrame.from_records(records, columns=columns)


def summary_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """mean / std / min / max of each metric per dataset, protocol and method."""
    keys = ["dataset", "protocol", "method"]
    grouped = frame.groupby(keys, sort=False)[list(METRICS)].agg(["mean", "std", "min", "max"])
    grouped.columns = [f"{metric}_{stat}" for metric, stat in grouped.columns]
    std_cols = [c for c in grouped.columns if c.endswith("_std")]
    # pandas gives NaN for the sample std of one repetition
    grouped[std_cols] = grouped[std_cols].fillna(0.0)
    return grouped.reset_index()


def excel_bytes(frames: Mapping[str, pd.DataFrame]) -> bytes:
    buffer = io.BytesIO()
    with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
        for sheet, frame in frames.items():
            frame.to_excel(writer, index=False, sheet_name=sheet[:31])
    return buffer.getvalue()


def write_report(doc: Mapping[str, Any], path: str | Path, fmt: str | None = None) -> Path:
    """Write ``doc`` as JSON, or as the flat per-repetition CSV.

    The format follows the file suffix unless ``fmt`` is given.
    """
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "json")
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    if fmt == "csv":
        report_frame(doc).to_csv(path, index=False, encoding="utf-8")
    else:
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    logger.info("report written to %s", path)
    return path
