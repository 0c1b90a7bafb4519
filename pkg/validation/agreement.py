"""Inter-annotator agreement, union adjudication and label-level accuracy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd

from corpus.errors import DegenerateInputError, MisalignedReferencesError, RecordValidationError
from corpus.ontology import CONCEPTS, ConceptId, check_concept


@dataclass(frozen=True)
class DualAnnotation:
    verse_ref: str
    annotator_a_labels: frozenset[ConceptId]
    annotator_b_labels: frozenset[ConceptId]
    a_abstain_ok: bool
    b_abstain_ok: bool

    def __post_init__(self) -> None:
        for name in ("annotator_a_labels", "annotator_b_labels"):
            labels = frozenset(check_concept(c) for c in getattr(self, name))
            object.__setattr__(self, name, labels)


@dataclass(frozen=True)
class AdjudicatedReference:
    verse_ref: str
    reference_labels: frozenset[ConceptId]


class KappaResult(NamedTuple):
    p_o: float
    p_e: float
    kappa: float  # NaN when p_e == 1

    @property
    def undefined(self) -> bool:
        return math.isnan(self.kappa)


def cohen_kappa(a_marks: Sequence[bool], b_marks: Sequence[bool]) -> KappaResult:
    a = np.asarray(a_marks, dtype=bool)
    b = np.asarray(b_marks, dtype=bool)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise DegenerateInputError("cohen_kappa: need two equal-length, non-empty sequences")
    p_o = float(np.mean(a == b))
    pa, pb = float(a.mean()), float(b.mean())
    p_e = pa * pb + (1.0 - pa) * (1.0 - pb)
    if p_e >= 1.0:
        return KappaResult(p_o, p_e, float("nan"))
    return KappaResult(p_o, p_e, (p_o - p_e) / (1.0 - p_e))


def adjudicate(dual: DualAnnotation) -> AdjudicatedReference:
    """Union rule: a concept is in the reference if either annotator assigned it."""
    return AdjudicatedReference(
        verse_ref=dual.verse_ref,
        reference_labels=dual.annotator_a_labels | dual.annotator_b_labels,
    )


def agreement_table(
    duals: Sequence[DualAnnotation], min_prevalence: float = 0.0
) -> tuple[pd.DataFrame, float]:
    """
    Per-concept p_o, p_e, kappa and positive counts, plus macro kappa.

    Concepts whose mean annotator prevalence is below `min_prevalence`, and
    concepts with undefined kappa, are left out of the macro average.
    """
    if not duals:
        raise DegenerateInputError("agreement_table: no dual annotations")
    rows = []
    for c in CONCEPTS:
        a = [c in d.annotator_a_labels for d in duals]
        b = [c in d.annotator_b_labels for d in duals]
        res = cohen_kappa(a, b)
        prevalence = 0.5 * (sum(a) + sum(b)) / len(duals)
        rows.append(
            {
                "concept": c,
                "p_o": res.p_o,
                "p_e": res.p_e,
                "kappa": res.kappa,
                "pos_a": sum(a),
                "pos_b": sum(b),
                "kappa_undefined": res.undefined,
                "in_macro": (not res.undefined) and prevalence >= min_prevalence,
            }
        )
    table = pd.DataFrame(rows)
    used = table.loc[table["in_macro"], "kappa"]
    macro = float(used.mean()) if len(used) else float("nan")
    return table, macro


def abstention_appropriateness(duals: Sequence[DualAnnotation]) -> float:
    if not duals:
        raise DegenerateInputError("abstention_appropriateness: no dual annotations")
    return sum(d.a_abstain_ok and d.b_abstain_ok for d in duals) / len(duals)


def _align(
    predictions: Mapping[str, Collection[ConceptId]],
    references: Sequence[AdjudicatedReference],
) -> None:
    missing = [r.verse_ref for r in references if r.verse_ref not in predictions]
    if missing:
        raise MisalignedReferencesError(missing)


def precision_recall_f1(
    predictions: Mapping[str, Collection[ConceptId]],
    references: Sequence[AdjudicatedReference],
) -> tuple[pd.DataFrame, dict[str, float]]:
    """
    Per-concept precision / recall / F1 against the adjudicated reference.

    Precision is undefined (NaN, flagged) for concepts never predicted and those
    concepts are dropped from the macro precision and F1; recall is likewise
    undefined for concepts with zero support.
    """
    _align(predictions, references)
    rows = []
    for c in CONCEPTS:
        tp = n_pred = support = 0
        for ref in references:
            pred = c in predictions[ref.verse_ref]
            gold = c in ref.reference_labels
            n_pred += pred
            support += gold
            tp += pred and gold
        precision = tp / n_pred if n_pred else float("nan")
        recall = tp / support if support else float("nan")
        if math.isnan(precision) or math.isnan(recall):
            f1 = float("nan")
        elif precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        rows.append(
            {
                "concept": c,
                "n_pred": n_pred,
                "n_correct": tp,
                "support": support,
                "precision": precision,
                "recall": recall,
                "f1": f1,
                "precision_undefined": n_pred == 0,
            }
        )
    table = pd.DataFrame(rows)
    macro = {m: float(table[m].mean(skipna=True)) for m in ("precision", "recall", "f1")}
    return table, macro


def label_instances(
    predictions: Mapping[str, Mapping[ConceptId, float]],
    references: Sequence[AdjudicatedReference],
) -> tuple[np.ndarray, np.ndarray]:
    """(confidence, correct) for every predicted label instance on the reference set."""
    _align(predictions, references)
    conf: list[float] = []
    correct: list[bool] = []
    for ref in references:
        for c, p in predictions[ref.verse_ref].items():
            conf.append(float(p))
            correct.append(c in ref.reference_labels)
    return np.asarray(conf, dtype=np.float64), np.asarray(correct, dtype=bool)


def parse_label_set(cell: str, verse_ref: str = "") -> frozenset[ConceptId]:
    """Semicolon-joined labels; blank cell -> empty set."""
    names = [x.strip() for x in str(cell).split(";") if x.strip()]
    try:
        return frozenset(check_concept(x) for x in names)
    except RecordValidationError as exc:
        raise RecordValidationError(f"{verse_ref}: {exc}", label=exc.label) from exc


def precision_table(prf: pd.DataFrame) -> pd.DataFrame:
    """#Pred / #Correct / precision view of a precision_recall_f1 table."""
    return prf[["concept", "n_pred", "n_correct", "precision", "precision_undefined"]].copy()
