from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from corpus.errors import DegenerateInputError, InvalidParameterError

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class CoverageRow:
    threshold: float
    retained: int
    coverage: float
    accuracy: float  # NaN when nothing is retained
    risk: float

    @property
    def undefined(self) -> bool:
        return self.retained == 0


def coverage_risk(
    confidences: Sequence[float],
    correctness: Sequence[bool],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> list[CoverageRow]:
    """Keep instances with confidence >= tau; report coverage and risk per tau."""
    p = np.asarray(confidences, dtype=np.float64)
    y = np.asarray(correctness, dtype=bool)
    if p.size == 0 or p.shape != y.shape:
        raise DegenerateInputError("coverage_risk: need equal-length, non-empty inputs")
    taus = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise InvalidParameterError(f"coverage_risk: thresholds must be ascending, got {taus}")

    rows = []
    for tau in taus:
        keep = p >= tau
        retained = int(keep.sum())
        acc = float(y[keep].mean()) if retained else float("nan")
        rows.append(
            CoverageRow(
                threshold=tau,
                retained=retained,
                coverage=retained / p.size,
                accuracy=acc,
                risk=1.0 - acc if retained else float("nan"),
            )
        )
    return rows


def coverage_frame(rows: Sequence[CoverageRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "tau": r.threshold,
                "retained": r.retained,
                "coverage": r.coverage,
                "accuracy": r.accuracy,
                "risk": r.risk,
                "undefined": r.undefined,
            }
            for r in rows
        ],
        columns=["tau", "retained", "coverage", "accuracy", "risk", "undefined"],
    )
