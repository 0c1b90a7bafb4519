"""Expected calibration error and temperature scaling of label confidences."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.special import expit, logit

from corpus.errors import DegenerateInputError, InvalidParameterError

logger = logging.getLogger(__name__)

CLIP = 1e-12
LOG_T_RANGE = (math.log(0.05), math.log(20.0))
SEARCH_TOL = 1e-6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    count: int
    mean_conf: float
    accuracy: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"CalibrationBin: lo={self.lo} must be < hi={self.hi}")
        if self.count < 0:
            raise ValueError("CalibrationBin: negative count")

    @property
    def gap(self) -> float:
        return abs(self.accuracy - self.mean_conf)


@dataclass(frozen=True)
class TemperatureFit:
    temperature: float
    nll: float
    boundary: bool = False  # degenerate input, T pinned to a search bound


def _pair(
    confidences: Sequence[float], correctness: Sequence[bool]
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.bool_]]:
    p = np.asarray(confidences, dtype=np.float64)
    y = np.asarray(correctness, dtype=bool)
    if p.shape != y.shape or p.ndim != 1:
        raise DegenerateInputError("calibration: confidences and correctness differ in length")
    if p.size == 0:
        raise DegenerateInputError("calibration: no label instances")
    return p, y


def apply_temperature(p: npt.ArrayLike, temperature: float) -> npt.NDArray[np.float64]:
    """p' = sigmoid(logit(p) / T), with p clipped away from 0 and 1."""
    if not temperature > 0:
        raise InvalidParameterError(f"apply_temperature: T must be > 0, got {temperature}")
    arr = np.clip(np.asarray(p, dtype=np.float64), CLIP, 1.0 - CLIP)
    if temperature == 1.0:
        return arr
    return np.asarray(expit(logit(arr) / temperature), dtype=np.float64)


def temperature_nll(
    confidences: Sequence[float], correctness: Sequence[bool], temperature: float
) -> float:
    """Mean binary negative log-likelihood of correctness under scaled confidences."""
    p, y = _pair(confidences, correctness)
    q = np.clip(apply_temperature(p, temperature), CLIP, 1.0 - CLIP)
    return float(-np.mean(np.where(y, np.log(q), np.log1p(-q))))


def fit_temperature(
    confidences: Sequence[float],
    correctness: Sequence[bool],
    tol: float = SEARCH_TOL,
) -> TemperatureFit:
    """
    Golden-section search for T on log T in [ln 0.05, ln 20].

    All-correct or all-incorrect input has no interior minimum; the better
    bound is returned with `boundary=True` and a warning.
    """
    p, y = _pair(confidences, correctness)
    lo, hi = LOG_T_RANGE

    def f(log_t: float) -> float:
        return temperature_nll(p, y, math.exp(log_t))

    if y.all() or not y.any():
        best = min((lo, hi), key=f)
        t = math.exp(best)
        logger.warning("fit_temperature: degenerate correctness, T pinned to %.4g", t)
        return TemperatureFit(temperature=t, nll=f(best), boundary=True)

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = 0.5 * (a + b)
    return TemperatureFit(temperature=math.exp(best), nll=f(best))


def bin_edges(bin_width: float = 0.1) -> npt.NDArray[np.float64]:
    if not 0 < bin_width <= 1:
        raise InvalidParameterError(f"ece: bin_width must be in (0, 1], got {bin_width}")
    return np.round(np.arange(0.0, 1.0 + bin_width / 2, bin_width), 12)


def ece(
    confidences: Sequence[float], correctness: Sequence[bool], bin_width: float = 0.1
) -> tuple[float, list[CalibrationBin]]:
    """
    Fixed-width expected calibration error.

    Bins are right-open except the last, which is closed at 1.0. Empty bins
    are left out of the returned list.
    """
    p, y = _pair(confidences, correctness)
    edges = bin_edges(bin_width)
    n_bins = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, n_bins - 1)
    bins: list[CalibrationBin] = []
    total = 0.0
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            continue
        conf = float(p[mask].mean())
        acc = float(y[mask].mean())
        bins.append(CalibrationBin(float(edges[b]), float(edges[b + 1]), count, conf, acc))
        total += count / p.size * abs(acc - conf)
    return total, bins


def bins_frame(bins: Sequence[CalibrationBin]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "lo": b.lo,
                "hi": b.hi,
                "count": b.count,
                "mean_conf": b.mean_conf,
                "accuracy": b.accuracy,
                "gap": b.gap,
            }
            for b in bins
        ],
        columns=["lo", "hi", "count", "mean_conf", "accuracy", "gap"],
    )
