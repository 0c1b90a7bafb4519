"""Comparisons between two spectral bases (normalization, weighting ablations)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from corpus.errors import ConceptSetMismatchError
from spectral.model import SpectralModel


@dataclass(frozen=True)
class ModeMatch:
    axis_a: int
    axis_b: int
    correlation: float  # absolute
    sign: float = 1.0  # sign of the raw correlation; flips b onto a


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def _abs_corr(x: np.ndarray, y: np.ndarray) -> float:
    return abs(_corr(x, y))


def _aligned(a: SpectralModel, b: SpectralModel) -> np.ndarray:
    if set(a.concepts) != set(b.concepts):
        raise ConceptSetMismatchError("spectral models are over different concepts")
    return np.array([b.concepts.index(c) for c in a.concepts])


def basis_correlation(a: SpectralModel, b: SpectralModel, k_max: int = 3) -> list[float]:
    """|corr(u_k^a, u_k^b)| for k = 1..k_max, concepts aligned by name."""
    perm = _aligned(a, b)
    k_max = min(k_max, a.n_modes - 1)
    return [_abs_corr(a.vector(k), b.vector(k)[perm]) for k in range(1, k_max + 1)]


def match_modes(a: SpectralModel, b: SpectralModel, k_max: int = 3) -> list[ModeMatch]:
    """
    Greedy one-to-one matching of non-trivial modes 1..k_max by largest |corr|.

    Returned in order of axis_a.
    """
    perm = _aligned(a, b)
    k_max = min(k_max, a.n_modes - 1)
    signed = np.zeros((k_max, k_max))
    for i in range(k_max):
        for j in range(k_max):
            signed[i, j] = _corr(a.vector(i + 1), b.vector(j + 1)[perm])
    corr = np.where(np.isnan(signed), -1.0, np.abs(signed))
    free_a, free_b = set(range(k_max)), set(range(k_max))
    matches: list[ModeMatch] = []
    while free_a:
        i, j = max(
            ((i, j) for i in free_a for j in free_b),
            key=lambda ij: (corr[ij], -ij[0], -ij[1]),
        )
        value = float(corr[i, j]) if corr[i, j] >= 0 else np.nan
        sign = -1.0 if signed[i, j] < 0 else 1.0
        matches.append(ModeMatch(i + 1, j + 1, value, sign))
        free_a.discard(i)
        free_b.discard(j)
    return sorted(matches, key=lambda m: m.axis_a)


def top_loadings(model: SpectralModel, axis: int, n: int = 3) -> list[tuple[str, float]]:
    u = model.vector(axis)
    order = sorted(range(len(u)), key=lambda j: (-abs(u[j]), j))
    return [(model.concepts[j], float(u[j])) for j in order[:n]]


def top_loadings_frame(model: SpectralModel, k_max: int = 3, n: int = 3) -> pd.DataFrame:
    rows = [
        {
            "axis": k,
            "eigenvalue": float(model.eigenvalues[k]),
            "rank": r,
            "concept": c,
            "loading": v,
        }
        for k in range(1, min(k_max, model.n_modes - 1) + 1)
        for r, (c, v) in enumerate(top_loadings(model, k, n), start=1)
    ]
    return pd.DataFrame(rows, columns=["axis", "eigenvalue", "rank", "concept", "loading"])


def align_coordinates(coords_b: pd.DataFrame, matches: list[ModeMatch]) -> pd.DataFrame:
    """
    Relabel and sign-flip basis-b coordinates so that column em{axis_a} holds the
    b-mode matched to a's axis, ready for `coordinate_correlation` against basis a.
    """
    out = pd.DataFrame({"poet": coords_b["poet"]})
    for m in matches:
        out[f"em{m.axis_a}"] = m.sign * coords_b[f"em{m.axis_b}"]
    return out
