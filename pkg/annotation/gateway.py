"""Schema enforcement and bounded retry around an annotation backend."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Literal, Sequence

from annotation.backends import AnnotationBackend, AnnotationRequest
from corpus.errors import RecordValidationError, SchemaError
from corpus.ontology import is_concept
from corpus.schema import AnnotatedVerse

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 5
TRACE_CHARS = 200
PROMPTS_DIR = Path(__file__).resolve().parent / "prompts"

REQUIRED_KEYS = ("labels", "confidences", "abstain")


@dataclass(frozen=True)
class AttemptRecord:
    raw_response: str
    valid: bool
    error: str = ""


@dataclass
class AnnotationAttemptLog:
    attempts: list[AttemptRecord] = field(default_factory=list)
    final_status: Literal["ok", "exhausted"] = "exhausted"

    def __post_init__(self) -> None:
        if len(self.attempts) > MAX_ATTEMPTS:
            raise ValueError(
                f"AnnotationAttemptLog: {len(self.attempts)} attempts > {MAX_ATTEMPTS}"
            )
        if self.final_status == "ok" and not (self.attempts and self.attempts[-1].valid):
            raise ValueError("AnnotationAttemptLog: status ok requires a valid last attempt")


def failure_note(trace: str, attempts: int = MAX_ATTEMPTS) -> str:
    return f"invalid output after {attempts} retries: {trace[:TRACE_CHARS]}"


@lru_cache(maxsize=None)
def load_prompt_template(template_id: str) -> str:
    path = PROMPTS_DIR / f"{template_id}.txt"
    if not path.exists():
        raise KeyError(f"Unknown prompt template: {template_id}")
    return path.read_text(encoding="utf-8")


def render_prompt(verse_text: str, template_id: str = "persian_verse_v1") -> str:
    return f"{load_prompt_template(template_id).rstrip()}\n\nVerse:\n{verse_text}\n"


def validate_annotation_payload(
    raw: str, *, poet: str = "unknown", source_line: int = 1, verse_text: str | None = None
) -> AnnotatedVerse:
    """
    Accept exactly one JSON object in the annotation schema.

    Raises SchemaError with kind invalid-structure, unknown-label,
    inconsistent-abstain, invalid-confidence or key-mismatch.
    """
    try:
        payload = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise SchemaError("invalid-structure", f"not a single JSON record ({exc})") from exc
    if not isinstance(payload, dict):
        raise SchemaError("invalid-structure", "top-level value is not an object")
    missing = [k for k in REQUIRED_KEYS if k not in payload]
    if missing:
        raise SchemaError("invalid-structure", f"missing keys: {missing}")

    labels = payload["labels"]
    confidences = payload["confidences"]
    abstain = payload["abstain"]
    rationale = payload.get("rationale") or {}
    notes = payload.get("notes") or ""
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise SchemaError("invalid-structure", "labels must be a list of strings")
    if not isinstance(confidences, dict):
        raise SchemaError("invalid-structure", "confidences must be an object")
    if not isinstance(abstain, bool):
        raise SchemaError("invalid-structure", "abstain must be a boolean")
    if not isinstance(rationale, dict) or not isinstance(notes, str):
        raise SchemaError("invalid-structure", "rationale must be an object, notes a string")

    unknown = [x for x in list(labels) + list(confidences) if not is_concept(x)]
    if unknown:
        raise SchemaError("unknown-label", f"outside the ontology: {sorted(set(unknown))}")
    if abstain and (labels or confidences):
        raise SchemaError("inconsistent-abstain", "abstain=true with non-empty labels")
    for key, value in confidences.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError("invalid-confidence", f"'{key}' is not a number")
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise SchemaError("invalid-confidence", f"'{key}'={value} outside [0, 1]")
    if len(set(labels)) != len(labels) or set(labels) != set(confidences):
        raise SchemaError("key-mismatch", "confidence keys differ from labels")

    text = verse_text if verse_text is not None else payload.get("input_verse", "")
    if not isinstance(text, str):
        raise SchemaError("invalid-structure", "input_verse must be a string")
    try:
        return AnnotatedVerse(
            poet=poet,
            verse_text=text,
            labels=frozenset(labels),
            confidences={k: float(v) for k, v in confidences.items()},
            abstain=abstain,
            notes=notes,
            source_line=source_line,
            rationale={str(k): str(v) for k, v in rationale.items()},
        )
    except RecordValidationError as exc:
        raise SchemaError("invalid-structure", str(exc)) from exc


def annotate_with_retry(
    req: AnnotationRequest,
    backend: AnnotationBackend,
    *,
    poet: str = "unknown",
    source_line: int = 1,
    max_attempts: int = MAX_ATTEMPTS,
) -> tuple[AnnotatedVerse, AnnotationAttemptLog]:
    """
    Ask the backend up to `max_attempts` times; the first valid payload wins.

    On exhaustion the verse is returned abstained, with the last invalid
    response recorded in its notes.
    """
    max_attempts = min(max_attempts, MAX_ATTEMPTS)
    attempts: list[AttemptRecord] = []
    for attempt in range(max_attempts):
        try:
            raw = backend.generate(req)
        except Exception as exc:  # transport failures count as invalid attempts
            logger.warning("attempt %d: backend error: %s", attempt + 1, exc)
            attempts.append(AttemptRecord("", valid=False, error=f"transport: {exc}"))
            continue
        try:
            verse = validate_annotation_payload(
                raw, poet=poet, source_line=source_line, verse_text=req.verse_text
            )
        except SchemaError as exc:
            logger.debug("attempt %d rejected: %s", attempt + 1, exc)
            attempts.append(AttemptRecord(raw_response=raw, valid=False, error=str(exc)))
            continue
        attempts.append(AttemptRecord(raw_response=raw, valid=True))
        return verse, AnnotationAttemptLog(attempts=attempts, final_status="ok")

    last = attempts[-1] if attempts else AttemptRecord("", False, "no attempts")
    trace = last.raw_response or last.error
    logger.warning("%s:%d exhausted %d attempts", poet, source_line, len(attempts))
    verse = AnnotatedVerse(
        poet=poet,
        verse_text=req.verse_text,
        labels=frozenset(),
        confidences={},
        abstain=True,
        notes=failure_note(trace, len(attempts)),
        source_line=source_line,
    )
    return verse, AnnotationAttemptLog(attempts=attempts, final_status="exhausted")


def annotate_corpus(
    verse_texts: Sequence[str],
    backend: AnnotationBackend,
    poet: str,
    template_id: str = "persian_verse_v1",
    max_workers: int = 1,
) -> list[tuple[AnnotatedVerse, AnnotationAttemptLog]]:
    """Annotate verses independently; source_line is the 1-based position."""

    def one(item: tuple[int, str]) -> tuple[AnnotatedVerse, AnnotationAttemptLog]:
        line, text = item
        req = AnnotationRequest(verse_text=text, prompt_template_id=template_id)
        return annotate_with_retry(req, backend, poet=poet, source_line=line)

    items = list(enumerate(verse_texts, start=1))
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]
