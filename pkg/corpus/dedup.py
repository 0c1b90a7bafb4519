from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from corpus.normalize import dedup_key
from corpus.schema import Corpus, NormalizationPolicy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DedupEntry:
    poet: str
    line: int
    kept_line: int
    reason: str


@dataclass(frozen=True)
class DedupReport:
    removed: tuple[DedupEntry, ...]

    def __len__(self) -> int:
        return len(self.removed)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(e.poet, e.line, e.reason) for e in self.removed],
            columns=["poet", "line", "reason"],
        )


def dedup_corpus(
    corpus: Corpus, policy: NormalizationPolicy | None = None
) -> tuple[Corpus, DedupReport]:
    """
    Drop repeated verses within each poet, keeping the first occurrence.

    Two verses are duplicates when their normalized text is equal. Surviving
    verses are returned untouched and the operation is idempotent.
    """
    policy = policy or NormalizationPolicy()
    seen: dict[tuple[str, str], int] = {}
    kept = []
    removed: list[DedupEntry] = []
    for verse in corpus.verses:
        key = (verse.poet, dedup_key(verse.verse_text, policy))
        first = seen.get(key)
        if first is None:
            seen[key] = verse.source_line
            kept.append(verse)
            continue
        removed.append(
            DedupEntry(
                poet=verse.poet,
                line=verse.source_line,
                kept_line=first,
                reason=f"duplicate of line {first}",
            )
        )

    if removed:
        logger.info("dedup removed %d verses", len(removed))
    return Corpus(verses=tuple(kept), poets=corpus.poets), DedupReport(removed=tuple(removed))


def write_dedup_report(report: DedupReport, path: str | Path) -> None:
    report.to_frame().to_csv(path, index=False)
