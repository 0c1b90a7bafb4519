"""Confidence-stratified sampling of verses for human validation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from corpus.errors import InvalidParameterError
from corpus.ontology import CONCEPTS
from corpus.schema import AnnotatedVerse, Corpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StratumSpec:
    """Verses with max confidence in [lo, hi), or the abstained verses."""

    name: str
    lo: float = 0.0
    hi: float = math.inf
    abstained: bool = False
    target: int | None = None  # None -> proportional share of the total

    def contains(self, v: AnnotatedVerse) -> bool:
        if self.abstained:
            return v.abstain
        return not v.abstain and self.lo <= v.max_confidence < self.hi


DEFAULT_STRATA: tuple[StratumSpec, ...] = (
    StratumSpec("abstained", abstained=True),
    StratumSpec("low", 0.0, 0.7),
    StratumSpec("medium", 0.7, 0.8),
    StratumSpec("high", 0.8, math.inf),
)


def assign_strata(corpus: Corpus, strata: Sequence[StratumSpec]) -> list[list[int]]:
    """Verse indices per stratum; every verse must fall in exactly one stratum."""
    members: list[list[int]] = [[] for _ in strata]
    for i, v in enumerate(corpus.verses):
        hits = [s for s, spec in enumerate(strata) if spec.contains(v)]
        if len(hits) != 1:
            raise InvalidParameterError(
                f"strata do not partition the corpus: {v.verse_ref} in {len(hits)} strata"
            )
        members[hits[0]].append(i)
    return members


def largest_remainder(weights: Sequence[float], total: int, caps: Sequence[int]) -> list[int]:
    """
    Integer allocation of `total` proportional to `weights`, capped per slot.

    Floors first, then one extra unit per slot by descending remainder (lowest
    index on ties). Capacity freed by caps is re-allocated to the remaining slots.
    """
    alloc = [0] * len(weights)
    remaining = total
    open_slots = [i for i in range(len(weights)) if caps[i] > 0 and weights[i] > 0]
    while remaining > 0 and open_slots:
        wsum = sum(weights[i] for i in open_slots)
        quotas = {i: remaining * weights[i] / wsum for i in open_slots}
        add = {i: min(int(math.floor(quotas[i])), caps[i] - alloc[i]) for i in open_slots}
        left = remaining - sum(add.values())
        order = sorted(open_slots, key=lambda i: (-(quotas[i] - math.floor(quotas[i])), i))
        for i in order:
            if left <= 0:
                break
            if alloc[i] + add[i] < caps[i]:
                add[i] += 1
                left -= 1
        for i in open_slots:
            alloc[i] += add[i]
        placed = sum(add.values())
        remaining -= placed
        open_slots = [i for i in open_slots if alloc[i] < caps[i]]
        if placed == 0:
            break
    return alloc


def stratified_sample(
    corpus: Corpus,
    total: int = 500,
    strata: Sequence[StratumSpec] = DEFAULT_STRATA,
    seed: int = 0,
) -> list[str]:
    """
    Verse references ("poet:line") sampled without replacement within strata.

    After allocation, each concept carried by some verse but missing from the
    sample is swapped in for a same-stratum pick whose labels stay covered.
    """
    n = len(corpus)
    if total < 0 or total > n:
        raise InvalidParameterError(f"stratified_sample: total {total} not in [0, {n}]")
    members = assign_strata(corpus, strata)
    if total == 0:
        return []
    sizes = [len(m) for m in members]
    if all(spec.target is None for spec in strata):
        weights = [float(s) for s in sizes]
    else:
        weights = [float(spec.target or 0) for spec in strata]
    alloc = largest_remainder(weights, total, sizes)
    short = total - sum(alloc)
    if short > 0:  # targets smaller than total: spread the rest proportionally
        spare = [sizes[i] - alloc[i] for i in range(len(strata))]
        extra = largest_remainder([float(s) for s in spare], short, spare)
        alloc = [a + e for a, e in zip(alloc, extra)]

    rng = np.random.Generator(np.random.MT19937(np.random.SeedSequence(seed)))
    chosen: list[set[int]] = []
    for members_s, k in zip(members, alloc):
        picks = rng.choice(len(members_s), size=k, replace=False) if k else []
        chosen.append({members_s[int(j)] for j in picks})

    _top_up_concepts(corpus, members, chosen, rng)
    picked = sorted(i for s in chosen for i in s)
    return [corpus.verses[i].verse_ref for i in picked]


def _top_up_concepts(
    corpus: Corpus,
    members: list[list[int]],
    chosen: list[set[int]],
    rng: np.random.Generator,
) -> None:
    verses = corpus.verses
    stratum_of = {i: s for s, m in enumerate(members) for i in m}

    def coverage() -> dict[str, int]:
        counts = {c: 0 for c in CONCEPTS}
        for s in chosen:
            for i in s:
                for c in verses[i].labels:
                    counts[c] += 1
        return counts

    for concept in CONCEPTS:
        counts = coverage()
        if counts[concept] > 0:
            continue
        candidates = [i for i, v in enumerate(verses) if concept in v.labels]
        if not candidates:
            continue
        new = candidates[int(rng.integers(len(candidates)))]
        s = stratum_of[new]
        removable = [
            i
            for i in sorted(chosen[s])
            if all(counts[c] > 1 for c in verses[i].labels)
        ]
        if removable:
            chosen[s].discard(removable[-1])
        else:
            logger.warning("sample grows by one verse to cover '%s'", concept)
        chosen[s].add(new)
