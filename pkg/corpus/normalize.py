from __future__ import annotations

import unicodedata

from corpus.schema import NormalizationPolicy

DEFAULT_POLICY = NormalizationPolicy()


def _is_mark(ch: str) -> bool:
    # nonspacing marks, including those with combining class 0
    return unicodedata.category(ch) == "Mn"


def normalize_text(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> str:
    """
    Canonicalize verse text.

    NFKC composes compatibility forms (Arabic presentation forms, ligatures). With
    `strip_diacritics_for_dedup` the text is decomposed first so that precomposed
    letters lose their marks too, then recomposed.
    """
    out = unicodedata.normalize("NFKC", text) if policy.unicode_nfkc else text
    if policy.strip_diacritics_for_dedup:
        decomposed = unicodedata.normalize("NFKD" if policy.unicode_nfkc else "NFD", out)
        out = "".join(ch for ch in decomposed if not _is_mark(ch))
        out = unicodedata.normalize("NFKC" if policy.unicode_nfkc else "NFC", out)
    if policy.collapse_whitespace:
        out = " ".join(out.split())
    return out


def dedup_key(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> str:
    return normalize_text(text, policy)


def count_combining_marks(text: str) -> int:
    """Number of nonspacing marks (harakat, accents) after canonical decomposition."""
    return sum(1 for ch in unicodedata.normalize("NFD", text) if _is_mark(ch))
