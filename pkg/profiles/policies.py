"""Weighting policies for turning label instances into concept mass."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

from corpus.errors import InvalidParameterError, UsageError
from corpus.ontology import ConceptId
from corpus.schema import AnnotatedVerse

WeightKind = Literal["confidence", "uniform"]


@dataclass(frozen=True)
class WeightPolicy:
    kind: WeightKind = "confidence"
    threshold: float | None = None  # keep instances with p >= threshold

    def __post_init__(self) -> None:
        if self.kind not in ("confidence", "uniform"):
            raise InvalidParameterError(f"WeightPolicy: unknown kind '{self.kind}'")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise InvalidParameterError(f"WeightPolicy: threshold {self.threshold} not in [0, 1]")

    @property
    def label(self) -> str:
        if self.kind == "uniform":
            return "uniform" if self.threshold is None else f"uniform_tau_{self.threshold:g}"
        return "base" if self.threshold is None else f"tau_{self.threshold:g}"

    def retains(self, confidence: float) -> bool:
        return self.threshold is None or confidence >= self.threshold

    def verse_weights(self, verse: AnnotatedVerse) -> dict[ConceptId, float]:
        """Weight per retained label of one verse; empty for abstained verses."""
        if verse.abstain:
            return {}
        return {
            c: (p if self.kind == "confidence" else 1.0)
            for c, p in verse.confidences.items()
            if self.retains(p)
        }


POLICY_CONFIG: dict[str, dict[str, Any]] = {
    "base": {"kind": "confidence", "threshold": None},
    "tau_0.5": {"kind": "confidence", "threshold": 0.5},
    "tau_0.7": {"kind": "confidence", "threshold": 0.7},
    "uniform": {"kind": "uniform", "threshold": None},
}


def get_policy(name: str) -> WeightPolicy:
    if name not in POLICY_CONFIG:
        raise UsageError(f"Unknown weight policy: {name} (choose from {sorted(POLICY_CONFIG)})")
    return WeightPolicy(**POLICY_CONFIG[name])
