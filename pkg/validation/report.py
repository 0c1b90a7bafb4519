"""One-call validation run over a completed sheet and the annotated corpus."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import pandas as pd

from corpus.schema import Corpus
from validation.agreement import (
    DualAnnotation,
    abstention_appropriateness,
    adjudicate,
    agreement_table,
    label_instances,
    precision_recall_f1,
    precision_table,
)
from validation.calibration import (
    CalibrationBin,
    TemperatureFit,
    apply_temperature,
    bins_frame,
    ece,
    fit_temperature,
)
from validation.selective import DEFAULT_THRESHOLDS, CoverageRow, coverage_frame, coverage_risk
from validation.sheet import predictions_for

logger = logging.getLogger(__name__)


@dataclass
class ValidationReport:
    n_verses: int
    n_instances: int
    agreement: pd.DataFrame
    macro_kappa: float
    prf: pd.DataFrame
    macro_prf: dict[str, float]
    abstention_ok: float
    temperature: TemperatureFit
    ece_raw: float
    ece_calibrated: float
    bins_raw: list[CalibrationBin]
    bins_calibrated: list[CalibrationBin]
    coverage: list[CoverageRow]

    @property
    def precision(self) -> pd.DataFrame:
        return precision_table(self.prf)

    def summary_frame(self) -> pd.DataFrame:
        rows = [
            ("verses", self.n_verses),
            ("label_instances", self.n_instances),
            ("macro_kappa", self.macro_kappa),
            ("macro_precision", self.macro_prf["precision"]),
            ("macro_recall", self.macro_prf["recall"]),
            ("macro_f1", self.macro_prf["f1"]),
            ("abstention_appropriateness", self.abstention_ok),
            ("temperature", self.temperature.temperature),
            ("temperature_boundary", self.temperature.boundary),
            ("ece_raw", self.ece_raw),
            ("ece_calibrated", self.ece_calibrated),
        ]
        return pd.DataFrame(rows, columns=["metric", "value"])

    def calibration_frame(self) -> pd.DataFrame:
        raw = bins_frame(self.bins_raw).assign(stage="raw")
        cal = bins_frame(self.bins_calibrated).assign(stage="calibrated")
        return pd.concat([raw, cal], ignore_index=True)

    def coverage_frame(self) -> pd.DataFrame:
        return coverage_frame(self.coverage)


def run_validation(
    duals: Sequence[DualAnnotation],
    corpus: Corpus,
    min_prevalence: float = 0.0,
    bin_width: float = 0.1,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ValidationReport:
    """
    Agreement, adjudicated accuracy, abstention and calibration on one sheet.

    Calibration bins and the coverage-risk curve use temperature-scaled
    confidences of every model label instance on the sheet's verses.
    """
    refs = [d.verse_ref for d in duals]
    predictions = predictions_for(corpus, refs)
    references = [adjudicate(d) for d in duals]

    agreement, macro_kappa = agreement_table(duals, min_prevalence=min_prevalence)
    prf, macro = precision_recall_f1(predictions, references)
    conf, correct = label_instances(predictions, references)
    fit = fit_temperature(conf, correct)
    scaled = apply_temperature(conf, fit.temperature)
    ece_raw, bins_raw = ece(conf, correct, bin_width)
    ece_cal, bins_cal = ece(scaled, correct, bin_width)
    logger.info(
        "validation: kappa=%.3f F1=%.3f T=%.3f ECE %.4f -> %.4f",
        macro_kappa,
        macro["f1"],
        fit.temperature,
        ece_raw,
        ece_cal,
    )
    return ValidationReport(
        n_verses=len(duals),
        n_instances=int(conf.size),
        agreement=agreement,
        macro_kappa=macro_kappa,
        prf=prf,
        macro_prf=macro,
        abstention_ok=abstention_appropriateness(duals),
        temperature=fit,
        ece_raw=ece_raw,
        ece_calibrated=ece_cal,
        bins_raw=bins_raw,
        bins_calibrated=bins_cal,
        coverage=coverage_risk(scaled, correct, thresholds),
    )
