"""Validation sheet I/O and alignment of model predictions with sheet rows."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import pandas as pd

from corpus.errors import DataValidationError, DegenerateInputError, MisalignedReferencesError
from corpus.ontology import ConceptId
from corpus.schema import Corpus
from validation.agreement import DualAnnotation, parse_label_set

SHEET_COLUMNS = (
    "verse_ref",
    "annotator_a_labels",
    "annotator_b_labels",
    "a_abstain_ok",
    "b_abstain_ok",
)
TEMPLATE_COLUMNS = (
    "verse_ref",
    "poet",
    "line",
    "verse_text",
    "model_abstain",
    *SHEET_COLUMNS[1:],
)

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


def parse_bool(value: object, column: str, verse_ref: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise DataValidationError(f"validation sheet: {verse_ref}: bad {column} value {value!r}")


def load_validation_sheet(path: str | Path) -> list[DualAnnotation]:
    """Rows of the completed sheet; label cells are semicolon-joined concept names."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in SHEET_COLUMNS if c not in df.columns]
    if missing:
        raise DataValidationError(f"validation sheet: missing columns {missing}")
    if df.empty:
        raise DegenerateInputError(f"validation sheet: {path} has no rows")
    dupes = df["verse_ref"][df["verse_ref"].duplicated()].tolist()
    if dupes:
        raise DataValidationError(f"validation sheet: duplicate verse_ref {dupes[:5]}")

    out: list[DualAnnotation] = []
    for row in df.itertuples(index=False):
        ref = str(row.verse_ref).strip()
        out.append(
            DualAnnotation(
                verse_ref=ref,
                annotator_a_labels=parse_label_set(row.annotator_a_labels, ref),
                annotator_b_labels=parse_label_set(row.annotator_b_labels, ref),
                a_abstain_ok=parse_bool(row.a_abstain_ok, "a_abstain_ok", ref),
                b_abstain_ok=parse_bool(row.b_abstain_ok, "b_abstain_ok", ref),
            )
        )
    return out


def write_sample_sheet(refs: Sequence[str], corpus: Corpus, path: str | Path) -> pd.DataFrame:
    """Blank sheet for the two annotators, one row per sampled verse."""
    lookup = corpus.lookup()
    missing = [r for r in refs if r not in lookup]
    if missing:
        raise MisalignedReferencesError(missing)
    rows = []
    for ref in refs:
        v = lookup[ref]
        rows.append(
            {
                "verse_ref": ref,
                "poet": v.poet,
                "line": v.source_line,
                "verse_text": v.verse_text,
                "model_abstain": v.abstain,
                "annotator_a_labels": "",
                "annotator_b_labels": "",
                "a_abstain_ok": "",
                "b_abstain_ok": "",
            }
        )
    sheet = pd.DataFrame(rows, columns=list(TEMPLATE_COLUMNS))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    sheet.to_csv(path, index=False)
    return sheet


def predictions_for(
    corpus: Corpus, refs: Sequence[str]
) -> dict[str, dict[ConceptId, float]]:
    """Model labels with confidences for each reference; unknown references raise."""
    lookup = corpus.lookup()
    missing = [r for r in refs if r not in lookup]
    if missing:
        raise MisalignedReferencesError(missing)
    return {r: dict(lookup[r].confidences) for r in refs}
