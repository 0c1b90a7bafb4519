"""Read per-poet JSONL annotation files into a validated Corpus."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import pandas as pd

from corpus.errors import (
    DataValidationError,
    RecordError,
    RecordParseError,
    RecordValidationError,
)
from corpus.normalize import normalize_text
from corpus.ontology import check_concept
from corpus.schema import AnnotatedVerse, Corpus, NormalizationPolicy

logger = logging.getLogger(__name__)

LABELS_SUFFIX = "_labels.jsonl"


@dataclass
class LoadCfg:
    strict: bool = True  # first bad line aborts the load
    policy: NormalizationPolicy = field(default_factory=NormalizationPolicy)
    max_workers: int = 1  # >1 reads poet files on a thread pool


@dataclass(frozen=True)
class LineError:
    path: str
    line_no: int
    error: str


def poet_from_filename(path: str | Path) -> str:
    """`HAFEZ_labels.jsonl` -> `HAFEZ`; anything else -> the stem before the first '_'."""
    name = Path(path).name
    if name.endswith(LABELS_SUFFIX):
        return name[: -len(LABELS_SUFFIX)]
    return Path(name).stem.split("_")[0]


def _confidence_value(value: Any, label: str, line_no: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordValidationError(
            f"confidence for '{label}' is not a number: {value!r}", line_no, label=label
        )
    return float(value)


def parse_record(
    line: str,
    poet_hint: str | None = None,
    line_no: int = 1,
    *,
    lenient: bool = False,
    source_file: str = "",
) -> AnnotatedVerse:
    """
    Parse one JSONL line into an AnnotatedVerse.

    Parameters
    ----------
    line:
        Raw line, one JSON object in the annotation schema.
    poet_hint:
        Used when the record carries no `poet` field (normally the filename stem).
    line_no:
        1-based line number; overridden by a `source_line` field in snapshots.
    lenient:
        Missing or null confidences are imputed as 0.0 and flagged instead of failing.

    Returns
    -------
    AnnotatedVerse
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"malformed JSON ({exc.msg})", line_no=line_no) from exc
    if not isinstance(record, dict):
        raise RecordParseError("record is not a JSON object", line_no=line_no)

    source_line = record.get("source_line", line_no)
    if isinstance(source_line, bool) or not isinstance(source_line, int):
        raise RecordParseError(f"source_line is not an integer: {source_line!r}", line_no)

    poet = record.get("poet") or poet_hint
    if not isinstance(poet, str) or not poet:
        raise RecordParseError("record has no poet and no poet hint was given", line_no)

    text = record.get("input_verse", record.get("verse_text"))
    if not isinstance(text, str):
        raise RecordParseError("input_verse missing or not a string", line_no)

    raw_labels = record.get("labels", [])
    if not isinstance(raw_labels, list):
        raise RecordParseError("labels is not a list", line_no)
    labels = [check_concept(lab, line_no) for lab in raw_labels]
    if len(set(labels)) != len(labels):
        repeated = sorted({lab for lab in labels if labels.count(lab) > 1})
        if not lenient:
            raise RecordValidationError(
                f"label listed more than once: {repeated}", line_no, label=repeated[0]
            )
        logger.warning("line %d: repeated labels %s collapsed", line_no, repeated)
        labels = list(dict.fromkeys(labels))

    raw_conf = record.get("confidences", {})
    if raw_conf is None:
        raw_conf = {}
    if not isinstance(raw_conf, dict):
        raise RecordParseError("confidences is not an object", line_no)
    for key in raw_conf:
        check_concept(key, line_no)
        if key not in labels:
            raise RecordValidationError(
                f"confidence given for unlisted label '{key}'", line_no, label=key
            )

    abstain = record.get("abstain", False)
    if not isinstance(abstain, bool):
        raise RecordParseError(f"abstain is not a boolean: {abstain!r}", line_no)
    if abstain and labels:
        raise RecordValidationError("abstain=true but labels are present", line_no)

    confidences: dict[str, float] = {}
    imputed: set[str] = set()
    for lab in labels:
        value = raw_conf.get(lab)
        if value is None:
            if not lenient:
                raise RecordValidationError(
                    f"missing confidence for label '{lab}'", line_no, label=lab
                )
            imputed.add(lab)
            value = 0.0
        confidences[lab] = _confidence_value(value, lab, line_no)
    extra = record.get("imputed") or []
    if isinstance(extra, list):
        imputed |= {str(x) for x in extra if x in confidences}

    notes = record.get("notes") or ""
    if not isinstance(notes, str):
        notes = str(notes)
    rationale = record.get("rationale") or {}
    if not isinstance(rationale, dict):
        rationale = {}

    return AnnotatedVerse(
        poet=poet,
        verse_text=text,
        labels=frozenset(labels),
        confidences=confidences,
        abstain=abstain,
        notes=notes,
        source_line=source_line,
        source_file=str(record.get("source_file", source_file) or ""),
        rationale={str(k): str(v) for k, v in rationale.items()},
        imputed=frozenset(imputed),
    )


def serialize_record(verse: AnnotatedVerse) -> str:
    """Inverse of parse_record: one JSON line, keys in a fixed order."""
    payload: dict[str, Any] = {
        "poet": verse.poet,
        "source_line": verse.source_line,
        "input_verse": verse.verse_text,
        "labels": list(verse.confidences),
        "confidences": dict(verse.confidences),
        "rationale": dict(verse.rationale),
        "abstain": verse.abstain,
        "notes": verse.notes,
    }
    if verse.source_file:
        payload["source_file"] = verse.source_file
    if verse.imputed:
        payload["imputed"] = sorted(verse.imputed)
    return json.dumps(payload, ensure_ascii=False)


def _decode_line(raw: bytes, line_no: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise RecordParseError(f"invalid UTF-8 at byte {exc.start}", line_no) from exc


def load_poet_file(
    path: str | Path, cfg: LoadCfg | None = None
) -> tuple[list[AnnotatedVerse], list[LineError]]:
    cfg = cfg or LoadCfg()
    path = Path(path)
    poet = poet_from_filename(path)
    storage = cfg.policy.for_storage()
    verses: list[AnnotatedVerse] = []
    errors: list[LineError] = []

    with path.open("rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            try:
                line = _decode_line(raw, line_no)
                if not line.strip():
                    continue
                verse = parse_record(
                    line, poet, line_no, lenient=not cfg.strict, source_file=path.name
                )
            except DataValidationError as exc:
                if cfg.strict:
                    if isinstance(exc, RecordError):
                        exc.path = exc.path or str(path)
                        raise
                    raise RecordValidationError(str(exc), line_no, path=str(path)) from exc
                logger.warning("[SKIP] %s:%d %s", path.name, line_no, exc)
                errors.append(LineError(path=str(path), line_no=line_no, error=str(exc)))
                continue
            text = normalize_text(verse.verse_text, storage)
            if text != verse.verse_text:
                verse = replace(verse, verse_text=text)
            verses.append(verse)

    logger.info("[OK] %s: %d verses (%d skipped)", poet, len(verses), len(errors))
    return verses, errors


def load_corpus(
    paths: Iterable[str | Path],
    strict: bool = True,
    policy: NormalizationPolicy | None = None,
    max_workers: int = 1,
) -> tuple[Corpus, list[LineError]]:
    """
    Load many poet files into one Corpus.

    Directories are expanded to their `*.jsonl` files. The result does not depend
    on the order of `paths` or on `max_workers`.
    """
    cfg = LoadCfg(strict=strict, policy=policy or NormalizationPolicy(), max_workers=max_workers)
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"Missing corpus file: {p}")
    files = sorted(set(files))

    if cfg.max_workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            results = list(pool.map(lambda f: load_poet_file(f, cfg), files))
    else:
        results = [load_poet_file(f, cfg) for f in files]

    verses = [v for vs, _ in results for v in vs]
    errors = [e for _, es in results for e in es]
    poets = [poet_from_filename(f) for f in files]
    return Corpus.from_verses(verses, poets=poets), errors


def write_errors(errors: Sequence[LineError], path: str | Path) -> None:
    out = pd.DataFrame(
        [(e.path, e.line_no, e.error) for e in errors], columns=["path", "line_no", "error"]
    )
    out.to_csv(path, index=False)


def write_corpus_snapshot(corpus: Corpus, path: str | Path) -> None:
    """Normalized corpus as JSONL; the first line lists every poet (including empty ones)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"poets": list(corpus.poets)}, ensure_ascii=False) + "\n")
        for verse in corpus.verses:
            fh.write(serialize_record(verse) + "\n")


def read_corpus_snapshot(path: str | Path) -> Corpus:
    path = Path(path)
    verses: list[AnnotatedVerse] = []
    poets: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if line_no == 1:
                head = json.loads(line)
                if isinstance(head, dict) and set(head) == {"poets"}:
                    poets = list(head["poets"])
                    continue
            verses.append(parse_record(line, None, line_no))
    return Corpus.from_verses(verses, poets=poets)
