from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats as sps

from corpus.errors import DegenerateInputError

EXACT_SPEARMAN_MAX_N = 9  # below 10 points the permutation null is enumerated


class SpearmanResult(NamedTuple):
    rho: float
    p_value: float


class PearsonResult(NamedTuple):
    r: float
    t_stat: float
    p_value: float
    ci95: tuple[float, float]


def _pair(xs: Sequence[float], ys: Sequence[float], what: str):
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInputError(f"{what}: inputs must be 1-D and of equal length")
    if x.size < 3:
        raise DegenerateInputError(f"{what}: need at least 3 points, got {x.size}")
    return x, y


def _corr(a: npt.NDArray[np.float64], b: npt.NDArray[np.float64], axis: int = -1):
    a = a - a.mean(axis=axis, keepdims=True)
    b = b - b.mean(axis=axis, keepdims=True)
    return (a * b).sum(axis=axis) / np.sqrt((a * a).sum(axis=axis) * (b * b).sum(axis=axis))


def _t_from_r(r: float, n: int) -> tuple[float, float]:
    if abs(r) >= 1.0:
        return math.copysign(math.inf, r), 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return t, float(2.0 * sps.t.sf(abs(t), n - 2))


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> SpearmanResult:
    """
    Rank correlation with average ranks for ties.

    p-value: t-approximation for n >= 10, exact permutation null below that.
    """
    x, y = _pair(xs, ys, "spearman_rho")
    rx = sps.rankdata(x, method="average")
    ry = sps.rankdata(y, method="average")
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise DegenerateInputError("spearman_rho: constant input has no ranking")
    rho = float(np.clip(_corr(rx, ry), -1.0, 1.0))
    n = x.size
    if n <= EXACT_SPEARMAN_MAX_N:
        res = sps.permutation_test(
            (rx,),
            lambda a, axis: _corr(a, ry, axis=axis),
            permutation_type="pairings",
            n_resamples=np.inf,
            vectorized=True,
            alternative="two-sided",
        )
        return SpearmanResult(rho, float(res.pvalue))
    _, p = _t_from_r(rho, n)
    return SpearmanResult(rho, p)


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> PearsonResult:
    """Sample Pearson r, t statistic on n-2 df, two-sided p and Fisher-z 95% CI."""
    x, y = _pair(xs, ys, "pearson_r")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInputError("pearson_r: zero variance")
    n = x.size
    r = float(np.clip(_corr(x, y), -1.0, 1.0))
    t, p = _t_from_r(r, n)
    if n <= 3 or abs(r) >= 1.0:
        ci = (r, r) if abs(r) >= 1.0 else (-1.0, 1.0)
    else:
        z = math.atanh(r)
        half = float(sps.norm.ppf(0.975)) / math.sqrt(n - 3)
        ci = (math.tanh(z - half), math.tanh(z + half))
    return PearsonResult(r, t, p, ci)


def rank_descending(values: Sequence[float]) -> npt.NDArray[np.float64]:
    """1 = largest value; ties share the average rank."""
    return sps.rankdata(-np.asarray(values, dtype=np.float64), method="average")
