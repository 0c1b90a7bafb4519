"""Figure data series and minimal SVG charts rendered from them."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

HIST_STEP = 0.05


def histogram_edges(values: np.ndarray, step: float = HIST_STEP) -> np.ndarray:
    """Edges on a `step` grid spanning [min, max] of the values."""
    lo = math.floor(round(float(values.min()) / step, 9)) * step
    hi = math.ceil(round(float(values.max()) / step, 9)) * step
    if hi <= lo:
        hi = lo + step
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 12)


def confidence_histogram(confidences: np.ndarray) -> pd.DataFrame:
    """Counts per bin; bins are right-open except the last."""
    if confidences.size == 0:
        return pd.DataFrame(columns=["lo", "hi", "count"])
    edges = histogram_edges(confidences)
    counts, _ = np.histogram(confidences, bins=edges)
    return pd.DataFrame({"lo": edges[:-1], "hi": edges[1:], "count": counts})


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def bar_svg(df: pd.DataFrame, x: str, y: str, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(df[x].astype(str), df[y].to_numpy(dtype=float))
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    ax.tick_params(axis="x", labelrotation=45)
    return _save(fig, path)


def histogram_svg(df: pd.DataFrame, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    widths = (df["hi"] - df["lo"]).to_numpy(dtype=float)
    ax.bar(df["lo"].to_numpy(dtype=float), df["count"], width=widths, align="edge")
    ax.set_xlabel("confidence")
    ax.set_ylabel("count")
    ax.set_title(title)
    return _save(fig, path)


def scatter_svg(
    df: pd.DataFrame, x: str, y: str, path: Path, label: str | None = "poet", title: str = ""
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(df[x].to_numpy(dtype=float), df[y].to_numpy(dtype=float))
    if label and label in df:
        for _, row in df.iterrows():
            ax.annotate(str(row[label]), (row[x], row[y]), fontsize=8)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    return _save(fig, path)


def heatmap_svg(matrix: pd.DataFrame, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(8, 5))
    im = ax.imshow(matrix.to_numpy(dtype=float), aspect="auto")
    ax.set_xticks(range(matrix.shape[1]), [str(c) for c in matrix.columns], rotation=45)
    ax.set_yticks(range(matrix.shape[0]), [str(i) for i in matrix.index])
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    return _save(fig, path)


def line_svg(df: pd.DataFrame, x: str, y: str, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(df[x].to_numpy(dtype=float), df[y].to_numpy(dtype=float), marker="o")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    return _save(fig, path)
