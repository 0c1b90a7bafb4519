"""Descriptive statistics of a corpus (sizes, abstention, label density, confidences)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from corpus.normalize import count_combining_marks
from corpus.schema import Corpus

FAILURE_NOTE_PREFIX = "invalid output after"
INVALID_STRUCTURE = "invalid-structure"


@dataclass(frozen=True)
class CorpusSummary:
    verses: int
    abstained: int
    annotated: int
    abstain_rate: float
    abstain_rate_undefined: bool  # empty corpus: rate reported as 0.0
    label_instances: int
    labels_per_annotated_verse: float
    confidence_min: float
    confidence_mean: float
    confidence_max: float
    combining_marks: int
    imputed_confidences: int
    failure_notes: int
    invalid_structure_notes: int
    top_abstention_notes: tuple[tuple[str, int], ...] = ()
    per_poet: pd.DataFrame = field(default_factory=pd.DataFrame, compare=False)

    def to_frame(self) -> pd.DataFrame:
        """metric/value rows, one per scalar field."""
        rows = [
            ("verses", self.verses),
            ("abstained", self.abstained),
            ("annotated", self.annotated),
            ("abstain_rate", self.abstain_rate),
            ("abstain_rate_undefined", int(self.abstain_rate_undefined)),
            ("label_instances", self.label_instances),
            ("labels_per_annotated_verse", self.labels_per_annotated_verse),
            ("confidence_min", self.confidence_min),
            ("confidence_mean", self.confidence_mean),
            ("confidence_max", self.confidence_max),
            ("combining_marks", self.combining_marks),
            ("imputed_confidences", self.imputed_confidences),
            ("failure_notes", self.failure_notes),
            ("invalid_structure_notes", self.invalid_structure_notes),
        ]
        return pd.DataFrame(rows, columns=["metric", "value"])


def _confidence_stats(values: list[float]) -> tuple[float, float, float]:
    if not values:
        return (float("nan"),) * 3
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.min()), float(arr.mean()), float(arr.max())


def corpus_stats(corpus: Corpus, top_notes: int = 5) -> CorpusSummary:
    n = len(corpus)
    abstained = [v for v in corpus.verses if v.abstain]
    annotated = [v for v in corpus.verses if not v.abstain]
    conf = [p for v in annotated for p in v.confidences.values()]
    instances = len(conf)
    cmin, cmean, cmax = _confidence_stats(conf)

    notes = Counter(v.notes for v in abstained if v.notes)
    rows = []
    for poet in corpus.poets:
        vs = [v for v in corpus.verses if v.poet == poet]
        n_abs = sum(v.abstain for v in vs)
        n_ann = len(vs) - n_abs
        p_conf = [p for v in vs for p in v.confidences.values()]
        rows.append(
            {
                "poet": poet,
                "verses": len(vs),
                "abstained": n_abs,
                "abstain_rate": n_abs / len(vs) if vs else 0.0,
                "annotated": n_ann,
                "label_instances": len(p_conf),
                "labels_per_verse": len(p_conf) / n_ann if n_ann else 0.0,
                "confidence_mean": float(np.mean(p_conf)) if p_conf else float("nan"),
            }
        )

    return CorpusSummary(
        verses=n,
        abstained=len(abstained),
        annotated=len(annotated),
        abstain_rate=len(abstained) / n if n else 0.0,
        abstain_rate_undefined=n == 0,
        label_instances=instances,
        labels_per_annotated_verse=instances / len(annotated) if annotated else 0.0,
        confidence_min=cmin,
        confidence_mean=cmean,
        confidence_max=cmax,
        combining_marks=sum(count_combining_marks(v.verse_text) for v in corpus.verses),
        imputed_confidences=sum(len(v.imputed) for v in corpus.verses),
        failure_notes=sum(v.notes.startswith(FAILURE_NOTE_PREFIX) for v in abstained),
        invalid_structure_notes=sum(INVALID_STRUCTURE in v.notes for v in abstained),
        top_abstention_notes=tuple(notes.most_common(top_notes)),
        per_poet=pd.DataFrame(
            rows,
            columns=[
                "poet",
                "verses",
                "abstained",
                "abstain_rate",
                "annotated",
                "label_instances",
                "labels_per_verse",
                "confidence_mean",
            ],
        ),
    )
