from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from corpus.errors import RecordValidationError
from corpus.ontology import ConceptId, check_concept, sort_concepts


@dataclass(frozen=True)
class NormalizationPolicy:
    unicode_nfkc: bool = True
    collapse_whitespace: bool = True
    strip_diacritics_for_dedup: bool = False  # only affects dedup keys, never stored text

    def for_storage(self) -> "NormalizationPolicy":
        return NormalizationPolicy(
            unicode_nfkc=self.unicode_nfkc,
            collapse_whitespace=self.collapse_whitespace,
            strip_diacritics_for_dedup=False,
        )


@dataclass(frozen=True)
class AnnotatedVerse:
    """
    One verse with its (possibly empty) set of concept labels.

    Invariants:
        - abstain=True  => no labels and no confidences
        - confidence keys are exactly the labels, each value in [0, 1]
        - source_line >= 1
    """

    poet: str
    verse_text: str
    labels: frozenset[ConceptId]
    confidences: Mapping[ConceptId, float] = field(hash=False)
    abstain: bool
    notes: str = ""
    source_line: int = 1
    source_file: str = ""
    rationale: Mapping[ConceptId, str] = field(default_factory=dict, hash=False)
    imputed: frozenset[ConceptId] = frozenset()  # labels whose confidence was filled with 0.0

    def __post_init__(self) -> None:
        line = self.source_line
        if not isinstance(self.poet, str) or not self.poet:
            raise RecordValidationError("poet identifier must be a non-empty string", line)
        if isinstance(line, bool) or not isinstance(line, int) or line < 1:
            raise RecordValidationError(f"source_line must be >= 1, got {line!r}")

        labels = frozenset(check_concept(c, line) for c in self.labels)
        conf: dict[ConceptId, float] = {}
        for key, value in self.confidences.items():
            check_concept(key, line)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise RecordValidationError(
                    f"confidence for '{key}' is not a number: {value!r}", line, label=key
                )
            value = float(value)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise RecordValidationError(
                    f"confidence for '{key}' outside [0, 1]: {value}", line, label=key
                )
            conf[key] = value

        if self.abstain and (labels or conf):
            raise RecordValidationError("abstained record carries labels", line)
        if set(conf) != set(labels):
            diff = sorted(set(conf) ^ set(labels))
            raise RecordValidationError(
                f"confidence keys do not match labels: {diff}", line, label=diff[0]
            )
        if not self.imputed <= labels:
            raise RecordValidationError("imputed flags reference missing labels", line)

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "confidences", {c: conf[c] for c in sort_concepts(conf)})
        object.__setattr__(self, "rationale", dict(self.rationale))

    @property
    def ref(self) -> tuple[str, int]:
        return (self.poet, self.source_line)

    @property
    def verse_ref(self) -> str:
        return f"{self.poet}:{self.source_line}"

    @property
    def max_confidence(self) -> float:
        return max(self.confidences.values()) if self.confidences else 0.0


@dataclass(frozen=True)
class Corpus:
    """
    Ordered collection of annotated verses.

    Verses are ordered by poet identifier, then source file, then line number.
    Poets with no surviving verse still appear in `poets`.
    """

    verses: tuple[AnnotatedVerse, ...]
    poets: tuple[str, ...]

    def __post_init__(self) -> None:
        known = set(self.poets)
        stray = sorted({v.poet for v in self.verses} - known)
        if stray:
            raise RecordValidationError(f"verses reference unknown poets: {stray}")

    @classmethod
    def from_verses(
        cls, verses: Iterable[AnnotatedVerse], poets: Iterable[str] = ()
    ) -> "Corpus":
        ordered = sorted(verses, key=lambda v: (v.poet, v.source_file, v.source_line))
        names = sorted(set(poets) | {v.poet for v in ordered})
        return cls(verses=tuple(ordered), poets=tuple(names))

    def __len__(self) -> int:
        return len(self.verses)

    def __iter__(self) -> Iterator[AnnotatedVerse]:
        return iter(self.verses)

    def by_poet(self, poet: str) -> tuple[AnnotatedVerse, ...]:
        if poet not in self.poets:
            raise KeyError(f"Unknown poet: {poet}")
        return tuple(v for v in self.verses if v.poet == poet)

    def annotated(self) -> tuple[AnnotatedVerse, ...]:
        return tuple(v for v in self.verses if not v.abstain)

    def lookup(self) -> dict[str, AnnotatedVerse]:
        """verse_ref -> verse; later duplicates of a reference are ignored."""
        out: dict[str, AnnotatedVerse] = {}
        for v in self.verses:
            out.setdefault(v.verse_ref, v)
        return out
