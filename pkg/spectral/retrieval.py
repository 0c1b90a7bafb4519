"""Verse-level axis scores and exemplar retrieval."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import pandas as pd

from corpus.errors import InvalidParameterError
from corpus.ontology import ConceptId, check_concept
from corpus.schema import AnnotatedVerse, Corpus
from profiles.policies import WeightPolicy
from spectral.model import SpectralModel

Direction = Literal["positive", "negative", "absolute"]


@dataclass(frozen=True)
class VerseAxisScore:
    poet: str
    line: int
    axis: int
    score: float
    contributing: tuple[tuple[ConceptId, float], ...]  # (label, confidence) on the graph
    verse_text: str = ""


@dataclass(frozen=True)
class LabelHit:
    poet: str
    line: int
    concept: ConceptId
    confidence: float
    verse_text: str = ""


def score_verse(
    v: AnnotatedVerse,
    model: SpectralModel,
    axis: int,
    policy: WeightPolicy | None = None,
) -> VerseAxisScore:
    """
    s = sum over the verse's labels on the graph of p_c * u_axis(c).

    With a policy, its weights replace the raw confidences (uniform -> 1 per label).
    Labels outside the graph contribute nothing; abstained verses score exactly 0.
    """
    if not 1 <= axis < model.n_modes:
        raise InvalidParameterError(f"score_verse: axis {axis} not in [1, {model.n_modes - 1}]")
    if v.abstain:
        return VerseAxisScore(v.poet, v.source_line, axis, 0.0, (), v.verse_text)
    pos = {c: j for j, c in enumerate(model.concepts)}
    weights = policy.verse_weights(v) if policy is not None else dict(v.confidences)
    u = model.eigenvectors[:, axis]
    score = 0.0
    contributing = []
    for c, w in weights.items():
        j = pos.get(c)
        if j is None:
            continue
        score += w * float(u[j])
        contributing.append((c, v.confidences[c]))
    return VerseAxisScore(v.poet, v.source_line, axis, score, tuple(contributing), v.verse_text)


def retrieve_extremes(
    corpus: Corpus,
    model: SpectralModel,
    axis: int,
    direction: Direction = "positive",
    top_n: int = 10,
    policy: WeightPolicy | None = None,
) -> list[VerseAxisScore]:
    if direction not in ("positive", "negative", "absolute"):
        raise InvalidParameterError(f"retrieve_extremes: unknown direction '{direction}'")
    if top_n <= 0:
        return []
    scores = [score_verse(v, model, axis, policy) for v in corpus.verses if not v.abstain]
    if direction == "positive":
        key = lambda s: (-s.score, s.poet, s.line)  # noqa: E731
    elif direction == "negative":
        key = lambda s: (s.score, s.poet, s.line)  # noqa: E731
    else:
        key = lambda s: (-abs(s.score), s.poet, s.line)  # noqa: E731
    return sorted(scores, key=key)[:top_n]


def retrieve_by_label(corpus: Corpus, concept: ConceptId, top_n: int = 10) -> list[LabelHit]:
    check_concept(concept)
    hits = [
        LabelHit(v.poet, v.source_line, concept, v.confidences[concept], v.verse_text)
        for v in corpus.verses
        if concept in v.confidences
    ]
    hits.sort(key=lambda h: (-h.confidence, h.poet, h.line))
    return hits[: max(top_n, 0)]


def mean_contributing_confidence(scores: Sequence[VerseAxisScore]) -> float:
    values = [p for s in scores for _, p in s.contributing]
    return float(np.mean(values)) if values else float("nan")


def scores_frame(scores: Sequence[VerseAxisScore]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "rank": r,
                "poet": s.poet,
                "line": s.line,
                "axis": s.axis,
                "score": s.score,
                "labels": ";".join(c for c, _ in s.contributing),
                "confidences": ";".join(f"{p:g}" for _, p in s.contributing),
                "verse_text": s.verse_text,
            }
            for r, s in enumerate(scores, start=1)
        ],
        columns=["rank", "poet", "line", "axis", "score", "labels", "confidences", "verse_text"],
    )


def hits_frame(hits: Sequence[LabelHit]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (r, h.poet, h.line, h.concept, h.confidence, h.verse_text)
            for r, h in enumerate(hits, start=1)
        ],
        columns=["rank", "poet", "line", "concept", "confidence", "verse_text"],
    )
