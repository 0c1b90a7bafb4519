from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd

from corpus.errors import ConceptSetMismatchError, DataValidationError
from corpus.ontology import ABSTAIN, CONCEPTS, ConceptId, check_concept_list
from corpus.schema import Corpus
from profiles.policies import WeightPolicy

EPSILON = 1e-9  # additive smoothing; fixed for cross-run comparability


def _frozen(arr: npt.ArrayLike) -> npt.NDArray[np.float64]:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PoetConceptMatrix:
    """
    Confidence mass X[i, c] of concept c for poet i.

    Rows follow `poets`, columns follow `concepts`. Abstained verses add nothing,
    except to the ABSTAIN column of the augmented variant.
    """

    poets: tuple[str, ...]
    concepts: tuple[ConceptId, ...]
    mass: npt.NDArray[np.float64]
    policy: WeightPolicy = WeightPolicy()

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", check_concept_list(self.concepts))
        mass = _frozen(self.mass)
        if mass.shape != (len(self.poets), len(self.concepts)):
            raise DataValidationError(
                f"PoetConceptMatrix: shape {mass.shape} != "
                f"({len(self.poets)}, {len(self.concepts)})"
            )
        if mass.size and (not np.all(np.isfinite(mass)) or mass.min() < 0.0):
            raise DataValidationError("PoetConceptMatrix: entries must be finite and >= 0")
        object.__setattr__(self, "mass", mass)

    def row(self, poet: str) -> npt.NDArray[np.float64]:
        return self.mass[self.poets.index(poet)]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.mass, index=list(self.poets), columns=list(self.concepts))
        df.index.name = "poet"
        return df


@dataclass(frozen=True)
class ConceptDistribution:
    concepts: tuple[ConceptId, ...]
    probs: npt.NDArray[np.float64]
    epsilon: float = EPSILON

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", check_concept_list(self.concepts))
        probs = _frozen(self.probs)
        if probs.shape != (len(self.concepts),):
            raise DataValidationError(
                f"ConceptDistribution: {probs.shape[0]} probs for {len(self.concepts)} concepts"
            )
        if probs.size == 0 or probs.min() <= 0.0:
            raise DataValidationError("ConceptDistribution: probabilities must be > 0")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise DataValidationError(f"ConceptDistribution: sum {probs.sum()!r} != 1")
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, concept: ConceptId) -> float:
        return float(self.probs[self.concepts.index(concept)])

    def as_series(self, name: str | None = None) -> pd.Series:
        return pd.Series(self.probs, index=list(self.concepts), name=name)


@dataclass(frozen=True)
class LiftProfile:
    concepts: tuple[ConceptId, ...]
    delta: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", _frozen(self.delta))

    def as_series(self) -> pd.Series:
        return pd.Series(self.delta, index=list(self.concepts))

    def top_positive(self, n: int = 3) -> list[tuple[ConceptId, float]]:
        order = sorted(range(len(self.concepts)), key=lambda j: (-self.delta[j], j))
        return [(self.concepts[j], float(self.delta[j])) for j in order[:n]]

    def top_negative(self, n: int = 3) -> list[tuple[ConceptId, float]]:
        order = sorted(range(len(self.concepts)), key=lambda j: (self.delta[j], j))
        return [(self.concepts[j], float(self.delta[j])) for j in order[:n]]


def _accumulate(
    corpus: Corpus, policy: WeightPolicy, concepts: Sequence[ConceptId], abstain_col: bool
) -> npt.NDArray[np.float64]:
    col = {c: j for j, c in enumerate(concepts)}
    row = {p: i for i, p in enumerate(corpus.poets)}
    mass = np.zeros((len(corpus.poets), len(concepts)), dtype=np.float64)
    for verse in corpus.verses:  # corpus order keeps sums bit-stable
        i = row[verse.poet]
        if verse.abstain:
            if abstain_col:
                mass[i, col[ABSTAIN]] += 1.0
            continue
        for c, w in policy.verse_weights(verse).items():
            j = col.get(c)
            if j is not None:
                mass[i, j] += w
    return mass


def poet_concept_mass(
    corpus: Corpus,
    policy: WeightPolicy | None = None,
    concepts: Sequence[ConceptId] = CONCEPTS,
) -> PoetConceptMatrix:
    policy = policy or WeightPolicy()
    concepts = tuple(concepts)
    if ABSTAIN in concepts:
        raise ConceptSetMismatchError("poet_concept_mass: use augment_with_abstain for ABSTAIN")
    mass = _accumulate(corpus, policy, concepts, abstain_col=False)
    return PoetConceptMatrix(poets=corpus.poets, concepts=concepts, mass=mass, policy=policy)


def augment_with_abstain(corpus: Corpus, policy: WeightPolicy | None = None) -> PoetConceptMatrix:
    """Matrix over the ontology plus ABSTAIN; each abstained verse adds exactly 1.0 there."""
    policy = policy or WeightPolicy()
    concepts = CONCEPTS + (ABSTAIN,)
    mass = _accumulate(corpus, policy, concepts, abstain_col=True)
    return PoetConceptMatrix(poets=corpus.poets, concepts=concepts, mass=mass, policy=policy)


def to_distribution(
    row: npt.ArrayLike,
    concepts: Sequence[ConceptId] = CONCEPTS,
    epsilon: float = EPSILON,
) -> ConceptDistribution:
    """P(c) = (X_c + eps) / sum(X_c' + eps)."""
    x = np.asarray(row, dtype=np.float64)
    if x.size and x.min() < 0.0:
        raise DataValidationError("to_distribution: negative mass")
    smoothed = x + epsilon
    return ConceptDistribution(
        concepts=tuple(concepts), probs=smoothed / smoothed.sum(), epsilon=epsilon
    )


def global_baseline(matrix: PoetConceptMatrix, epsilon: float = EPSILON) -> ConceptDistribution:
    """Pooled distribution; equal to smoothing the column sums with eps * n_poets."""
    if not matrix.poets:
        raise DataValidationError("global_baseline: matrix has no poets")
    totals = matrix.mass.sum(axis=0)
    return to_distribution(totals, matrix.concepts, epsilon * len(matrix.poets))


def poet_distributions(
    matrix: PoetConceptMatrix, epsilon: float = EPSILON
) -> dict[str, ConceptDistribution]:
    return {
        p: to_distribution(matrix.mass[i], matrix.concepts, epsilon)
        for i, p in enumerate(matrix.poets)
    }


def concept_lift(poet: ConceptDistribution, baseline: ConceptDistribution) -> LiftProfile:
    if poet.concepts != baseline.concepts:
        raise ConceptSetMismatchError(
            f"concept_lift: {len(poet.concepts)} vs {len(baseline.concepts)} concepts differ"
        )
    return LiftProfile(concepts=poet.concepts, delta=poet.probs - baseline.probs)


def concept_totals(matrix: PoetConceptMatrix) -> pd.DataFrame:
    """Weighted mass and share of each concept across all poets."""
    totals = matrix.mass.sum(axis=0)
    grand = totals.sum()
    share = totals / grand if grand > 0 else np.zeros_like(totals)
    return pd.DataFrame({"concept": list(matrix.concepts), "mass": totals, "share": share})
