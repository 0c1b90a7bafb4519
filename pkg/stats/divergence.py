"""Divergences between concept distributions (natural log, nats)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from corpus.errors import ConceptSetMismatchError
from profiles.aggregate import ConceptDistribution

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class DivergenceReport:
    poet: str
    kl: float
    js: float
    cosine_distance: float


def _check_pair(p: ConceptDistribution, q: ConceptDistribution) -> None:
    if p.concepts != q.concepts:
        raise ConceptSetMismatchError(
            f"divergence over different concept sets: {p.concepts} vs {q.concepts}"
        )


def kl_divergence(p: ConceptDistribution, q: ConceptDistribution) -> float:
    _check_pair(p, q)
    return float(np.sum(rel_entr(p.probs, q.probs)))


def js_divergence(p: ConceptDistribution, q: ConceptDistribution) -> float:
    _check_pair(p, q)
    m = 0.5 * (p.probs + q.probs)
    return float(0.5 * np.sum(rel_entr(p.probs, m)) + 0.5 * np.sum(rel_entr(q.probs, m)))


def cosine_distance(p: ConceptDistribution, q: ConceptDistribution) -> float:
    _check_pair(p, q)
    sim = float(np.dot(p.probs, q.probs) / (np.linalg.norm(p.probs) * np.linalg.norm(q.probs)))
    return float(np.clip(1.0 - sim, 0.0, 2.0))


def divergence_report(
    poet: str, p: ConceptDistribution, baseline: ConceptDistribution
) -> DivergenceReport:
    return DivergenceReport(
        poet=poet,
        kl=kl_divergence(p, baseline),
        js=js_divergence(p, baseline),
        cosine_distance=cosine_distance(p, baseline),
    )
