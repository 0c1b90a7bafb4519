"""CSV writers and console summaries for stage outputs."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd
from rich.console import Console
from rich.table import Table

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
DISPLAY_SUFFIX = "-display"


def write_csv(df: pd.DataFrame, path: str | Path, display_decimals: int | None = None) -> Path:
    """
    Write `df` at 12 significant digits; optionally a rounded `-display` twin.

    Returns the path of the full-precision file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if display_decimals is not None:
        display = path.with_name(f"{path.stem}{DISPLAY_SUFFIX}{path.suffix}")
        df.round(display_decimals).to_csv(display, index=False, lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(df))
    return path


def read_csv(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path)


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def summary_table(title: str, rows: Iterable[tuple[str, object]]) -> Table:
    table = Table(title=title, show_header=True, header_style="bold")
    table.add_column("metric")
    table.add_column("value", justify="right")
    for name, value in rows:
        table.add_row(name, _fmt(value))
    return table


def frame_table(title: str, df: pd.DataFrame, columns: Sequence[str] | None = None) -> Table:
    cols = list(columns or df.columns)
    table = Table(title=title, show_header=True, header_style="bold")
    for c in cols:
        table.add_column(str(c), justify="left" if df[c].dtype == object else "right")
    for _, row in df[cols].iterrows():
        table.add_row(*(_fmt(row[c]) for c in cols))
    return table


def print_table(table: Table, console: Console | None = None) -> None:
    (console or Console()).print(table)
