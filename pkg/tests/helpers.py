"""Small builders for in-test corpora."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from corpus.schema import AnnotatedVerse, Corpus

ABSTAIN_NOTE = "no clear psychological signal"


def verse(
    poet: str,
    line: int,
    conf: Mapping[str, float] | None = None,
    text: str | None = None,
    notes: str = "",
) -> AnnotatedVerse:
    """`conf=None` builds an abstained verse."""
    conf = dict(conf or {})
    abstain = not conf
    return AnnotatedVerse(
        poet=poet,
        verse_text=text if text is not None else f"{poet} verse {line}",
        labels=frozenset(conf),
        confidences=conf,
        abstain=abstain,
        notes=notes or (ABSTAIN_NOTE if abstain else ""),
        source_line=line,
    )


def corpus_of(*verses: AnnotatedVerse, poets: tuple[str, ...] = ()) -> Corpus:
    return Corpus.from_verses(verses, poets=poets)


def record_line(
    text: str,
    conf: Mapping[str, float] | None = None,
    notes: str = "",
    **extra: object,
) -> str:
    conf = dict(conf or {})
    payload = {
        "input_verse": text,
        "labels": list(conf),
        "confidences": conf,
        "rationale": {k: "..." for k in conf},
        "abstain": not conf,
        "notes": notes or ("" if conf else ABSTAIN_NOTE),
    }
    payload.update(extra)
    return json.dumps(payload, ensure_ascii=False)


def write_poet_file(directory: Path, poet: str, lines: list[str]) -> Path:
    path = directory / f"{poet}_labels.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
