"""Closed concept ontology used by every annotation."""
from __future__ import annotations

from corpus.errors import ConceptSetMismatchError, RecordValidationError

# ConceptId is a plain string drawn from CONCEPTS; ABSTAIN is only used by the
# abstention-augmented analyses.
ConceptId = str

CONCEPTS: tuple[ConceptId, ...] = (
    "ambivalent_attachment",
    "emotional_dependency",
    "idealization",
    "identity_fragmentation",
    "internal_projection",
    "melancholia",
    "romantic_obsession",
    "self_destructive_idealization",
    "spiritual_narcissism",
)

ABSTAIN: ConceptId = "ABSTAIN"

CONCEPTS_WITH_ABSTAIN: tuple[ConceptId, ...] = CONCEPTS + (ABSTAIN,)

CONCEPT_INDEX: dict[ConceptId, int] = {c: i for i, c in enumerate(CONCEPTS_WITH_ABSTAIN)}


def is_concept(name: object) -> bool:
    return isinstance(name, str) and name in CONCEPTS


def check_concept(name: object, line_no: int | None = None) -> ConceptId:
    if not is_concept(name):
        raise RecordValidationError(
            f"unknown concept label '{name}'", line_no=line_no, label=str(name)
        )
    return str(name)


def sort_concepts(names) -> tuple[ConceptId, ...]:
    """Order concept ids the way the ontology lists them."""
    return tuple(sorted(names, key=lambda c: CONCEPT_INDEX[c]))


def check_concept_list(concepts) -> tuple[ConceptId, ...]:
    out = tuple(concepts)
    if len(set(out)) != len(out):
        raise ConceptSetMismatchError(f"duplicate concepts in {out}")
    unknown = [c for c in out if c not in CONCEPT_INDEX]
    if unknown:
        raise ConceptSetMismatchError(f"unknown concepts: {unknown}")
    return out
