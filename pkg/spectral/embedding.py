"""Eigenmood coordinates: poet lifts projected on the Laplacian eigenvectors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import pandas as pd

from corpus.errors import ConceptSetMismatchError, InvalidParameterError
from profiles.aggregate import ConceptDistribution
from spectral.model import SpectralModel


@dataclass(frozen=True)
class EigenmoodCoords:
    poet: str
    coords: tuple[float, ...]  # z^(1) .. z^(k_max); the trivial mode is never reported


def check_k_max(model: SpectralModel, k_max: int) -> int:
    if k_max < 1 or k_max >= model.n_modes:
        raise InvalidParameterError(
            f"k_max={k_max} must be in [1, {model.n_modes - 1}] for {model.n_modes} concepts"
        )
    return k_max


def embed_poet(
    p: ConceptDistribution,
    baseline: ConceptDistribution,
    model: SpectralModel,
    k_max: int = 3,
    poet: str = "",
) -> EigenmoodCoords:
    """
    z^(k) = sum_c (P_i(c) - P0(c)) u_k(c) over the model's concepts.

    The lift is restricted to the filtered concepts without renormalization.
    """
    if p.concepts != baseline.concepts:
        raise ConceptSetMismatchError("embed_poet: poet and baseline concept lists differ")
    check_k_max(model, k_max)
    pos = {c: j for j, c in enumerate(p.concepts)}
    missing = [c for c in model.concepts if c not in pos]
    if missing:
        raise ConceptSetMismatchError(f"embed_poet: distribution lacks concepts {missing}")
    sel = [pos[c] for c in model.concepts]
    delta = p.probs[sel] - baseline.probs[sel]
    coords = tuple(float(delta @ model.eigenvectors[:, k]) for k in range(1, k_max + 1))
    return EigenmoodCoords(poet=poet, coords=coords)


def embed_poets(
    distributions: Mapping[str, ConceptDistribution],
    baseline: ConceptDistribution,
    model: SpectralModel,
    k_max: int = 3,
) -> pd.DataFrame:
    rows = []
    for poet, dist in distributions.items():
        z = embed_poet(dist, baseline, model, k_max, poet=poet)
        rows.append({"poet": poet, **{f"em{k}": v for k, v in enumerate(z.coords, start=1)}})
    return pd.DataFrame(rows, columns=["poet"] + [f"em{k}" for k in range(1, k_max + 1)])


def coordinate_correlation(a: pd.DataFrame, b: pd.DataFrame) -> dict[str, float]:
    """Per-axis Pearson correlation of two coordinate tables joined on poet."""
    joined = a.merge(b, on="poet", suffixes=("_a", "_b"))
    out: dict[str, float] = {}
    for col in a.columns:
        if col == "poet" or f"{col}_b" not in joined:
            continue
        x = joined[f"{col}_a"].to_numpy(dtype=np.float64)
        y = joined[f"{col}_b"].to_numpy(dtype=np.float64)
        if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
            out[col] = float("nan")
        else:
            out[col] = float(np.corrcoef(x, y)[0, 1])
    return out
