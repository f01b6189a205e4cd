"""Environment-driven settings and logging setup."""

from __future__ import annotations

import logging
import os
from pathlib import Path

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# .env entries never override variables already set in the environment
load_dotenv()

PACKAGE_DIR = Path(__file__).resolve().parent
DEFAULT_DATA_DIR = PACKAGE_DIR.parent / "data"


def data_dir() -> Path:
    """Directory holding the bundled CSV files and manifest.csv"""
    override = os.getenv("TREESMOOTH_DATA_DIR")
    return Path(override) if override else DEFAULT_DATA_DIR


def log_level() -> str:
    return os.getenv("TREESMOOTH_LOG_LEVEL", "INFO").upper()


def default_jobs() -> int:
    raw = os.getenv("TREESMOOTH_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def configure_logging(level: str | int | None = None) -> None:
    """Route all treesmooth logging to standard error through rich."""
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
    )
    logging.basicConfig(
        level=level if level is not None else log_level(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )
