from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt
import pandas as pd

from corpus.errors import InvalidParameterError
from corpus.ontology import ConceptId
from spectral.eigen import eigendecompose
from spectral.graph import CooccurrenceGraph

LaplacianKind = Literal["unnormalized", "symmetric_normalized"]

LAPLACIAN_ALIASES: dict[str, LaplacianKind] = {
    "unnorm": "unnormalized",
    "unnormalized": "unnormalized",
    "sym": "symmetric_normalized",
    "symmetric_normalized": "symmetric_normalized",
}


def resolve_kind(kind: str) -> LaplacianKind:
    if kind not in LAPLACIAN_ALIASES:
        raise InvalidParameterError(f"Unknown Laplacian kind: {kind}")
    return LAPLACIAN_ALIASES[kind]


def laplacian(graph: CooccurrenceGraph, kind: str = "unnormalized") -> npt.NDArray[np.float64]:
    """
    unnormalized:          L = D - W
    symmetric_normalized:  L = I - D^-1/2 W D^-1/2, isolated nodes keep zero rows
    """
    kind = resolve_kind(kind)
    w = graph.adjacency
    d = graph.degrees
    if kind == "unnormalized":
        return np.diag(d) - w
    inv_sqrt = np.zeros_like(d)
    nz = d > 0.0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    lap = np.diag(nz.astype(np.float64)) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    return 0.5 * (lap + lap.T)


@dataclass(frozen=True)
class SpectralModel:
    """Eigenpairs of a concept-graph Laplacian; column k of `eigenvectors` is u_k."""

    graph: CooccurrenceGraph
    laplacian_kind: LaplacianKind
    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        for name in ("eigenvalues", "eigenvectors"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def concepts(self) -> tuple[ConceptId, ...]:
        return self.graph.concepts

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def vector(self, k: int) -> npt.NDArray[np.float64]:
        return self.eigenvectors[:, k]

    def loadings_frame(self, k_max: int | None = None) -> pd.DataFrame:
        k_max = self.n_modes - 1 if k_max is None else k_max
        cols = {f"u{k}": self.eigenvectors[:, k] for k in range(0, k_max + 1)}
        df = pd.DataFrame(cols, index=list(self.concepts))
        df.index.name = "concept"
        return df

    def eigenvalues_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"k": range(self.n_modes), "eigenvalue": self.eigenvalues})


def fit_spectral_model(graph: CooccurrenceGraph, kind: str = "unnormalized") -> SpectralModel:
    kind = resolve_kind(kind)
    values, vectors = eigendecompose(laplacian(graph, kind))
    return SpectralModel(
        graph=graph, laplacian_kind=kind, eigenvalues=values, eigenvectors=vectors
    )
