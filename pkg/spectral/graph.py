"""Concept co-occurrence graph built from multi-label verses."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd

from corpus.errors import AllFilteredError, ConceptSetMismatchError, DataValidationError
from corpus.ontology import ABSTAIN, ConceptId, check_concept_list
from corpus.schema import Corpus
from profiles.aggregate import ConceptDistribution
from profiles.policies import WeightPolicy

MIN_SHARE = 1e-3


@dataclass(frozen=True)
class CooccurrenceGraph:
    """Symmetric, zero-diagonal, non-negative co-activation mass W[c, d]."""

    concepts: tuple[ConceptId, ...]
    adjacency: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", check_concept_list(self.concepts))
        w = np.array(self.adjacency, dtype=np.float64)
        n = len(self.concepts)
        if w.shape != (n, n):
            raise DataValidationError(f"CooccurrenceGraph: shape {w.shape}, expected {n}x{n}")
        if not np.array_equal(w, w.T):
            raise DataValidationError("CooccurrenceGraph: adjacency is not symmetric")
        if np.any(np.diag(w) != 0.0) or (w.size and w.min() < 0.0):
            raise DataValidationError("CooccurrenceGraph: needs zero diagonal and W >= 0")
        w.setflags(write=False)
        object.__setattr__(self, "adjacency", w)

    @property
    def degrees(self) -> npt.NDArray[np.float64]:
        return self.adjacency.sum(axis=1)

    def to_frame(self) -> pd.DataFrame:
        names = list(self.concepts)
        return pd.DataFrame(self.adjacency, index=names, columns=names)


def filter_concepts(
    baseline: ConceptDistribution, min_share: float = MIN_SHARE
) -> tuple[ConceptId, ...]:
    """Concepts whose baseline share is at least `min_share`, in ontology order."""
    if ABSTAIN in baseline.concepts:
        raise ConceptSetMismatchError("filter_concepts: baseline must not include ABSTAIN")
    kept = tuple(c for c, p in zip(baseline.concepts, baseline.probs) if p >= min_share)
    if not kept:
        raise AllFilteredError(f"filter_concepts: no concept has baseline share >= {min_share}")
    return kept


def build_cooccurrence(
    corpus: Corpus,
    concepts: Sequence[ConceptId],
    policy: WeightPolicy | None = None,
) -> CooccurrenceGraph:
    """
    W[c, d] sums, over non-abstained verses carrying both c and d, the mean of
    their two weights: (p_c + p_d) / 2 for confidence weighting, 1 for uniform.
    """
    policy = policy or WeightPolicy()
    concepts = tuple(concepts)
    if not concepts:
        raise AllFilteredError("build_cooccurrence: empty concept list")
    idx = {c: j for j, c in enumerate(concepts)}
    upper = np.zeros((len(concepts), len(concepts)), dtype=np.float64)
    for verse in corpus.verses:
        weights = [(idx[c], w) for c, w in policy.verse_weights(verse).items() if c in idx]
        weights.sort()
        for a in range(len(weights)):
            i, wi = weights[a]
            for b in range(a + 1, len(weights)):
                j, wj = weights[b]
                upper[i, j] += 0.5 * (wi + wj)
    return CooccurrenceGraph(concepts=concepts, adjacency=upper + upper.T)


def top_edges(graph: CooccurrenceGraph, n: int | None = 12) -> pd.DataFrame:
    """Edge list sorted by weight (desc), then concept order; zero edges dropped."""
    rows = []
    k = len(graph.concepts)
    for i in range(k):
        for j in range(i + 1, k):
            w = float(graph.adjacency[i, j])
            if w > 0.0:
                rows.append((graph.concepts[i], graph.concepts[j], w, i, j))
    rows.sort(key=lambda r: (-r[2], r[3], r[4]))
    if n is not None:
        rows = rows[:n]
    return pd.DataFrame([r[:3] for r in rows], columns=["concept_a", "concept_b", "weight"])
