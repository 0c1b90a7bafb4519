"""Nonparametric bootstrap of per-poet statistics against a fixed baseline and basis."""
from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.stats import rankdata

from corpus.errors import DegenerateInputError, InvalidParameterError, NoEvidenceError
from corpus.schema import Corpus
from profiles.aggregate import ConceptDistribution, to_distribution
from profiles.policies import WeightPolicy
from spectral.embedding import embed_poet
from spectral.model import SpectralModel
from stats.divergence import js_divergence

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 200

# (replicate_index, n) -> indices in [0, n)
Sampler = Callable[[int, int], npt.NDArray[np.int64]]

_EM_RE = re.compile(r"^EM-?(\d+)$")


@dataclass(frozen=True)
class BootstrapSummary:
    poet: str
    statistic: str
    replicates: int
    seed: int
    point_estimate: float
    mean: float
    lo: float
    hi: float
    n_verses: int

    def as_row(self) -> dict[str, object]:
        return {
            "poet": self.poet,
            "statistic": self.statistic,
            "point_estimate": self.point_estimate,
            "mean": self.mean,
            "lo": self.lo,
            "hi": self.hi,
            "replicates": self.replicates,
            "seed": self.seed,
            "n_verses": self.n_verses,
        }


def replicate_generator(seed: int, replicate: int) -> np.random.Generator:
    """Independent Mersenne-Twister substream per (seed, replicate index)."""
    return np.random.Generator(np.random.MT19937(np.random.SeedSequence([seed, replicate])))


def default_sampler(seed: int) -> Sampler:
    def sample(replicate: int, n: int) -> npt.NDArray[np.int64]:
        return replicate_generator(seed, replicate).integers(0, n, size=n)

    return sample


def percentile_interval(
    samples: Sequence[float], lo: float = 2.5, hi: float = 97.5
) -> tuple[float, float]:
    """Linear interpolation between order statistics."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise DegenerateInputError("percentile_interval: no samples")
    q = np.percentile(arr, [lo, hi], method="linear")
    return float(q[0]), float(q[1])


def _statistic_fn(
    statistic: str,
    baseline: ConceptDistribution,
    basis: SpectralModel | None,
) -> Callable[[ConceptDistribution], float]:
    if statistic == "D_JS":
        return lambda p: js_divergence(p, baseline)
    m = _EM_RE.match(statistic)
    if not m:
        raise InvalidParameterError(f"bootstrap: unknown statistic '{statistic}'")
    k = int(m.group(1))
    if basis is None:
        raise InvalidParameterError(f"bootstrap: statistic {statistic} needs a fixed basis")
    return lambda p: embed_poet(p, baseline, basis, k_max=k).coords[k - 1]


def bootstrap_poet(
    corpus: Corpus,
    poet: str,
    statistic: str = "D_JS",
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    fixed_baseline: ConceptDistribution | None = None,
    fixed_basis: SpectralModel | None = None,
    policy: WeightPolicy | None = None,
    sampler: Sampler | None = None,
    max_workers: int = 1,
) -> BootstrapSummary:
    """
    Resample the poet's non-abstained verses with replacement.

    Parameters
    ----------
    fixed_baseline:
        Global baseline P0 over the full ontology; never re-estimated per replicate.
    fixed_basis:
        Spectral model for EM-k statistics; never re-estimated per replicate.
    sampler:
        Index generator (replicate, n) -> indices; defaults to a seeded substream
        per replicate, so serial and threaded runs agree bit for bit.

    Returns
    -------
    BootstrapSummary
    """
    if replicates < 1:
        raise InvalidParameterError(f"bootstrap_poet: replicates must be >= 1, got {replicates}")
    if fixed_baseline is None:
        raise InvalidParameterError("bootstrap_poet: a fixed baseline is required")
    policy = policy or WeightPolicy()
    verses = [v for v in corpus.by_poet(poet) if not v.abstain]
    if not verses:
        raise NoEvidenceError(f"bootstrap_poet: poet '{poet}' has no non-abstained verses")

    concepts = fixed_baseline.concepts
    col = {c: j for j, c in enumerate(concepts)}
    weights = np.zeros((len(verses), len(concepts)), dtype=np.float64)
    for i, v in enumerate(verses):
        for c, w in policy.verse_weights(v).items():
            if c in col:
                weights[i, col[c]] += w

    stat = _statistic_fn(statistic, fixed_baseline, fixed_basis)
    n = len(verses)

    def evaluate(idx: npt.NDArray[np.int64]) -> float:
        row = weights[np.asarray(idx, dtype=np.int64)].sum(axis=0)
        return float(stat(to_distribution(row, concepts)))

    point = evaluate(np.arange(n))
    draw = sampler or default_sampler(seed)

    def one(r: int) -> float:
        return evaluate(draw(r, n))

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(one, range(replicates)))
    else:
        values = [one(r) for r in range(replicates)]

    lo, hi = percentile_interval(values)
    logger.debug("bootstrap %s %s: [%g, %g]", poet, statistic, lo, hi)
    return BootstrapSummary(
        poet=poet,
        statistic=statistic,
        replicates=replicates,
        seed=seed,
        point_estimate=point,
        mean=float(np.mean(values)),
        lo=lo,
        hi=hi,
        n_verses=n,
    )


def bootstrap_rank_correlation(
    xs: Sequence[float], ys: Sequence[float], replicates: int = 1000, seed: int = 0
) -> tuple[float, float, int]:
    """Percentile CI of Spearman rho over resampled pairs; returns (lo, hi, valid replicates)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    n = x.size
    sample = default_sampler(seed)
    rhos = []
    for r in range(replicates):
        idx = sample(r, n)
        try:
            rhos.append(_rank_rho(x[idx], y[idx]))
        except DegenerateInputError:
            continue
    if not rhos:
        raise DegenerateInputError("bootstrap_rank_correlation: every resample was degenerate")
    lo, hi = percentile_interval(rhos)
    return lo, hi, len(rhos)


def _rank_rho(x: npt.NDArray[np.float64], y: npt.NDArray[np.float64]) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInputError("constant resample")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    return float(np.corrcoef(rx, ry)[0, 1])


def summaries_frame(summaries: Sequence[BootstrapSummary]) -> pd.DataFrame:
    return pd.DataFrame([s.as_row() for s in summaries])

