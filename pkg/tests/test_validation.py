from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from corpus.errors import (
    DataValidationError,
    DegenerateInputError,
    InvalidParameterError,
    MisalignedReferencesError,
    RecordValidationError,
)
from corpus.ontology import CONCEPTS
from validation.agreement import (
    AdjudicatedReference,
    DualAnnotation,
    abstention_appropriateness,
    adjudicate,
    agreement_table,
    cohen_kappa,
    label_instances,
    parse_label_set,
    precision_recall_f1,
    precision_table,
)
from validation.calibration import (
    LOG_T_RANGE,
    apply_temperature,
    bin_edges,
    bins_frame,
    ece,
    fit_temperature,
    temperature_nll,
)
from validation.report import run_validation
from validation.sampling import (
    DEFAULT_STRATA,
    StratumSpec,
    assign_strata,
    largest_remainder,
    stratified_sample,
)
from validation.selective import coverage_frame, coverage_risk
from validation.sheet import (
    SHEET_COLUMNS,
    TEMPLATE_COLUMNS,
    load_validation_sheet,
    predictions_for,
    write_sample_sheet,
)
from tests.helpers import corpus_of, verse

A, B, C = CONCEPTS[:3]

# (p_o, p_e, kappa) per concept on a 500-verse, two-annotator sample
REFERENCE_AGREEMENT = {
    "ambivalent_attachment": (0.980, 0.931, 0.712),
    "emotional_dependency": (0.978, 0.744, 0.914),
    "idealization": (0.990, 0.986, 0.282),
    "identity_fragmentation": (0.984, 0.909, 0.825),
    "internal_projection": (0.984, 0.931, 0.770),
    "melancholia": (0.962, 0.660, 0.888),
    "romantic_obsession": (0.976, 0.765, 0.898),
    "self_destructive_idealization": (0.976, 0.873, 0.811),
    "spiritual_narcissism": (0.972, 0.898, 0.726),
}

# (positives A, positives B, both) reproducing the agreement above on 500 verses
REFERENCE_COUNTS = {
    "ambivalent_attachment": (16, 20, 13),
    "emotional_dependency": (74, 77, 70),
    "idealization": (5, 2, 1),
    "identity_fragmentation": (24, 24, 20),
    "internal_projection": (19, 17, 14),
    "melancholia": (109, 108, 99),
    "romantic_obsession": (68, 68, 62),
    "self_destructive_idealization": (37, 31, 28),
    "spiritual_narcissism": (27, 27, 20),
}


def _dual(ref, a=(), b=(), a_ok=True, b_ok=True) -> DualAnnotation:
    return DualAnnotation(ref, frozenset(a), frozenset(b), a_ok, b_ok)


def _reference_sheet(n: int = 500, abstain_ok: int = 428) -> list[DualAnnotation]:
    a_sets: list[set[str]] = [set() for _ in range(n)]
    b_sets: list[set[str]] = [set() for _ in range(n)]
    for concept, (pos_a, pos_b, both) in REFERENCE_COUNTS.items():
        only_a, only_b = pos_a - both, pos_b - both
        for i in range(both):
            a_sets[i].add(concept)
            b_sets[i].add(concept)
        for i in range(both, both + only_a):
            a_sets[i].add(concept)
        for i in range(both + only_a, both + only_a + only_b):
            b_sets[i].add(concept)
    return [
        _dual(f"P:{i + 1}", a_sets[i], b_sets[i], True, i < abstain_ok) for i in range(n)
    ]


# --- agreement ---


def test_kappa_hand_count():
    res = cohen_kappa([1, 1, 0, 0], [1, 0, 1, 0])
    assert (res.p_o, res.p_e, res.kappa) == (0.5, 0.5, 0.0)


def test_kappa_perfect_agreement():
    assert cohen_kappa([1, 0, 0, 1, 1], [1, 0, 0, 1, 1]).kappa == pytest.approx(1.0)


def test_kappa_undefined_for_constant_marks():
    res = cohen_kappa([0, 0, 0], [0, 0, 0])
    assert res.p_e == 1.0
    assert res.undefined and math.isnan(res.kappa)


def test_kappa_rejects_bad_input():
    with pytest.raises(DegenerateInputError):
        cohen_kappa([], [])
    with pytest.raises(DegenerateInputError):
        cohen_kappa([1, 0], [1])


@pytest.mark.parametrize("concept", sorted(REFERENCE_AGREEMENT))
def test_kappa_identity_on_reference_rows(concept):
    p_o, p_e, kappa = REFERENCE_AGREEMENT[concept]
    assert (p_o - p_e) / (1 - p_e) == pytest.approx(kappa, abs=0.002)


def test_reference_counts_reproduce_agreement_table():
    table, macro = agreement_table(_reference_sheet())
    table = table.set_index("concept")
    for concept, (p_o, p_e, kappa) in REFERENCE_AGREEMENT.items():
        row = table.loc[concept]
        assert row["p_o"] == pytest.approx(p_o, abs=0.0005)
        assert row["p_e"] == pytest.approx(p_e, abs=0.0005)
        assert row["kappa"] == pytest.approx(kappa, abs=0.002)
        assert (row["pos_a"], row["pos_b"]) == REFERENCE_COUNTS[concept][:2]
    assert macro == pytest.approx(0.758, abs=0.002)


def test_min_prevalence_drops_rare_concepts_from_macro():
    table, macro = agreement_table(_reference_sheet(), min_prevalence=0.01)
    excluded = table.loc[~table["in_macro"], "concept"].tolist()
    assert excluded == ["idealization"]
    assert macro == pytest.approx(0.818, abs=0.002)


def test_macro_kappa_skips_undefined_concepts():
    duals = [_dual("X:1", {A}, {A}), _dual("X:2", (), ())]
    table, macro = agreement_table(duals)
    assert table["kappa_undefined"].sum() == len(CONCEPTS) - 1
    assert macro == pytest.approx(1.0)


def test_abstention_appropriateness_counts_joint_approval():
    assert abstention_appropriateness(_reference_sheet()) == pytest.approx(0.856)
    with pytest.raises(DegenerateInputError):
        abstention_appropriateness([])


def test_union_adjudication():
    ref = adjudicate(_dual("X:1", {A}, {B}))
    assert ref.reference_labels == frozenset({A, B})


def test_dual_annotation_rejects_unknown_label():
    with pytest.raises(RecordValidationError):
        _dual("X:1", {"joy"}, ())


# --- precision / recall / F1 ---


def test_prf_identity():
    refs = [
        AdjudicatedReference("X:1", frozenset({A, B})),
        AdjudicatedReference("X:2", frozenset({A})),
    ]
    preds = {r.verse_ref: set(r.reference_labels) for r in refs}
    table, macro = precision_recall_f1(preds, refs)
    scored = table[table["support"] > 0]
    assert (scored[["precision", "recall", "f1"]] == 1.0).all().all()
    assert macro == {"precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_prf_counts_and_undefined_precision():
    refs = [
        AdjudicatedReference("X:1", frozenset({A})),
        AdjudicatedReference("X:2", frozenset({A, C})),
        AdjudicatedReference("X:3", frozenset()),
    ]
    preds = {"X:1": {A}, "X:2": {B}, "X:3": {A, B}}
    table, macro = precision_recall_f1(preds, refs)
    row = table.set_index("concept")
    assert (row.loc[A, "n_pred"], row.loc[A, "n_correct"], row.loc[A, "support"]) == (2, 1, 2)
    assert row.loc[A, "precision"] == 0.5 and row.loc[A, "recall"] == 0.5
    assert row.loc[B, "precision"] == 0.0 and math.isnan(row.loc[B, "recall"])
    assert row.loc[C, "precision_undefined"] and math.isnan(row.loc[C, "precision"])
    assert row.loc[C, "recall"] == 0.0
    assert macro["precision"] == pytest.approx(0.25)
    assert list(precision_table(table).columns) == [
        "concept",
        "n_pred",
        "n_correct",
        "precision",
        "precision_undefined",
    ]


def test_prf_requires_every_reference():
    refs = [AdjudicatedReference("X:1", frozenset({A})), AdjudicatedReference("X:9", frozenset())]
    with pytest.raises(MisalignedReferencesError):
        precision_recall_f1({"X:1": {A}}, refs)


def test_label_instances():
    refs = [AdjudicatedReference("X:1", frozenset({A})), AdjudicatedReference("X:2", frozenset())]
    conf, correct = label_instances({"X:1": {A: 0.9, B: 0.6}, "X:2": {}}, refs)
    np.testing.assert_allclose(conf, [0.9, 0.6])
    assert correct.tolist() == [True, False]


def test_parse_label_set():
    assert parse_label_set(f" {A}; {B};") == frozenset({A, B})
    assert parse_label_set("") == frozenset()
    with pytest.raises(RecordValidationError, match="X:3"):
        parse_label_set("grief", "X:3")


# --- calibration ---


def test_temperature_one_is_identity():
    p = np.array([0.1, 0.5, 0.73, 0.99])
    np.testing.assert_array_equal(apply_temperature(p, 1.0), p)


def test_temperature_sharpens_and_softens():
    assert apply_temperature([0.7], 0.5)[0] == pytest.approx(0.8448, abs=1e-4)
    assert apply_temperature([0.7], 2.0)[0] < 0.7
    assert apply_temperature([0.5], 0.3)[0] == pytest.approx(0.5)
    with pytest.raises(InvalidParameterError):
        apply_temperature([0.7], 0.0)


@given(
    st.lists(st.floats(0.01, 0.99), min_size=2, max_size=20),
    st.floats(0.1, 10.0),
)
def test_temperature_preserves_order(ps, t):
    p = np.sort(np.asarray(ps))
    assert np.all(np.diff(apply_temperature(p, t)) >= 0.0)


def _simulated(n: int, true_t: float, seed: int):
    rng = np.random.default_rng(seed)
    conf = rng.uniform(0.05, 0.95, size=n)
    correct = rng.uniform(size=n) < apply_temperature(conf, 1.0 / true_t)
    return conf, correct


def test_fit_recovers_calibrated_temperature():
    conf, correct = _simulated(20_000, 1.0, seed=7)
    fit = fit_temperature(conf, correct)
    assert not fit.boundary
    assert fit.temperature == pytest.approx(1.0, abs=0.05)
    assert fit.nll <= temperature_nll(conf, correct, 1.0) + 1e-9


def test_fit_sharpens_underconfident_scores():
    conf, correct = _simulated(20_000, 2.0, seed=11)
    assert fit_temperature(conf, correct).temperature == pytest.approx(0.5, abs=0.05)


def test_fit_degenerate_correctness_pins_bound():
    lo, hi = (math.exp(x) for x in LOG_T_RANGE)
    right = fit_temperature([0.8, 0.9, 0.7], [True, True, True])
    assert right.boundary and right.temperature == pytest.approx(lo)
    wrong = fit_temperature([0.8, 0.9, 0.7], [False, False, False])
    assert wrong.boundary and wrong.temperature == pytest.approx(hi)


def _grid_minimum(conf, correct, points: int):
    grid = np.linspace(*LOG_T_RANGE, points)
    nll = np.array([temperature_nll(conf, correct, math.exp(g)) for g in grid])
    return grid, nll


def test_fit_matches_grid_search():
    conf, correct = _simulated(5_000, 1.5, seed=3)
    grid, nll = _grid_minimum(conf, correct, 4_001)
    fit = fit_temperature(conf, correct)
    step = grid[1] - grid[0]
    assert abs(math.log(fit.temperature) - grid[np.argmin(nll)]) <= 2 * step
    assert fit.nll <= nll.min() + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.05, 0.95), st.booleans()), min_size=2, max_size=30))
def test_fit_is_never_beaten_by_a_grid_point(pairs):
    conf = [p for p, _ in pairs]
    correct = [y for _, y in pairs]
    assume(any(correct) and not all(correct))
    _, nll = _grid_minimum(conf, correct, 801)
    assert fit_temperature(conf, correct).nll <= nll.min() + 1e-4


def test_ece_single_bin():
    value, bins = ece([0.6, 0.8], [True, False], bin_width=0.5)
    assert value == pytest.approx(0.2)
    assert len(bins) == 1
    assert (bins[0].lo, bins[0].hi, bins[0].count) == (0.5, 1.0, 2)


def test_ece_zero_when_calibrated():
    assert ece([1.0, 1.0, 1.0], [True, True, True])[0] == 0.0
    assert ece([0.5, 0.5], [True, False])[0] == pytest.approx(0.0)


def test_ece_bin_boundaries():
    _, bins = ece([0.7, 0.79999, 1.0, 0.0], [True, False, True, False])
    assert [(b.lo, b.hi, b.count) for b in bins] == [(0.0, 0.1, 1), (0.7, 0.8, 2), (0.9, 1.0, 1)]
    frame = bins_frame(bins)
    assert list(frame.columns) == ["lo", "hi", "count", "mean_conf", "accuracy", "gap"]
    assert frame["count"].sum() == 4


def test_bin_edges():
    np.testing.assert_allclose(bin_edges(0.25), [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(InvalidParameterError):
        bin_edges(0.0)


def test_calibration_rejects_empty_input():
    with pytest.raises(DegenerateInputError):
        ece([], [])
    with pytest.raises(DegenerateInputError):
        fit_temperature([], [])


# --- coverage / risk ---


def test_coverage_risk_toy():
    rows = coverage_risk([0.9, 0.8, 0.4, 0.3], [True, True, False, True], [0.0, 0.5, 0.95])
    assert [(r.retained, r.coverage) for r in rows] == [(4, 1.0), (2, 0.5), (0, 0.0)]
    assert rows[0].risk == pytest.approx(0.25)
    assert rows[1].risk == 0.0
    assert rows[2].undefined and math.isnan(rows[2].risk)
    frame = coverage_frame(rows)
    assert frame["undefined"].tolist() == [False, False, True]


@given(
    st.lists(st.tuples(st.floats(0.0, 1.0), st.booleans()), min_size=1, max_size=50),
)
def test_coverage_is_non_increasing(pairs):
    conf, correct = zip(*pairs)
    rows = coverage_risk(conf, correct)
    coverages = [r.coverage for r in rows]
    assert all(b <= a for a, b in zip(coverages, coverages[1:]))


def test_coverage_risk_errors():
    with pytest.raises(InvalidParameterError):
        coverage_risk([0.5], [True], [0.8, 0.6])
    with pytest.raises(DegenerateInputError):
        coverage_risk([], [])


# --- stratified sampling ---


def _sampling_corpus():
    verses = [verse("X", i, {A: 0.6 + 0.01 * (i % 35)}) for i in range(1, 41)]
    verses += [verse("Y", i) for i in range(1, 11)]
    verses.append(verse("Z", 1, {B: 0.95}))
    return corpus_of(*verses)


def test_largest_remainder():
    assert largest_remainder([1.0, 1.0, 1.0], 10, [100, 100, 100]) == [4, 3, 3]
    assert largest_remainder([1.0, 1.0], 10, [2, 100]) == [2, 8]
    assert largest_remainder([0.0, 1.0], 3, [5, 5]) == [0, 3]


def test_strata_partition_the_corpus():
    corpus = _sampling_corpus()
    members = assign_strata(corpus, DEFAULT_STRATA)
    assert sum(len(m) for m in members) == len(corpus)
    with pytest.raises(InvalidParameterError):
        assign_strata(corpus, (StratumSpec("all", 0.0), StratumSpec("high", 0.8)))


def test_sample_whole_corpus():
    corpus = _sampling_corpus()
    refs = stratified_sample(corpus, total=len(corpus), seed=3)
    assert sorted(refs) == sorted(v.verse_ref for v in corpus.verses)


def test_sample_is_deterministic_and_covers_concepts():
    corpus = _sampling_corpus()
    first = stratified_sample(corpus, total=6, seed=5)
    assert first == stratified_sample(corpus, total=6, seed=5)
    assert len(first) == len(set(first)) == 6
    assert "Z:1" in first


def test_sample_with_empty_stratum():
    corpus = corpus_of(*(verse("X", i, {A: 0.9}) for i in range(1, 11)))
    refs = stratified_sample(corpus, total=4, seed=0)
    assert len(refs) == 4


def test_sample_size_bounds():
    corpus = _sampling_corpus()
    with pytest.raises(InvalidParameterError):
        stratified_sample(corpus, total=len(corpus) + 1)
    assert stratified_sample(corpus, total=0) == []


# --- sheet I/O and full run ---


def _write_sheet(path, rows, columns=SHEET_COLUMNS):
    pd.DataFrame(rows, columns=list(columns)).to_csv(path, index=False)
    return path


def test_load_validation_sheet(tmp_path):
    path = _write_sheet(
        tmp_path / "sheet.csv",
        [("X:1", f"{A};{B}", A, "yes", "1"), ("X:2", "", "", "false", "TRUE")],
    )
    duals = load_validation_sheet(path)
    assert duals[0].annotator_a_labels == frozenset({A, B})
    assert duals[1].annotator_b_labels == frozenset()
    assert (duals[1].a_abstain_ok, duals[1].b_abstain_ok) == (False, True)


@pytest.mark.parametrize(
    "rows, columns, error",
    [
        ([("X:1", A, A, "1")], SHEET_COLUMNS[:4], DataValidationError),
        ([], SHEET_COLUMNS, DegenerateInputError),
        ([("X:1", A, A, "1", "1"), ("X:1", A, A, "1", "1")], SHEET_COLUMNS, DataValidationError),
        ([("X:1", A, A, "maybe", "1")], SHEET_COLUMNS, DataValidationError),
        ([("X:1", "grief", A, "1", "1")], SHEET_COLUMNS, RecordValidationError),
    ],
)
def test_load_validation_sheet_errors(tmp_path, rows, columns, error):
    path = _write_sheet(tmp_path / "sheet.csv", rows, columns)
    with pytest.raises(error):
        load_validation_sheet(path)


def test_sample_sheet_template(tmp_path):
    corpus = corpus_of(verse("X", 1, {A: 0.9}), verse("X", 2))
    sheet = write_sample_sheet(["X:2", "X:1"], corpus, tmp_path / "out" / "sheet.csv")
    assert tuple(sheet.columns) == TEMPLATE_COLUMNS
    assert sheet["model_abstain"].tolist() == [True, False]
    with pytest.raises(MisalignedReferencesError):
        write_sample_sheet(["X:3"], corpus, tmp_path / "bad.csv")


def test_predictions_for_unknown_reference():
    corpus = corpus_of(verse("X", 1, {A: 0.9}))
    assert predictions_for(corpus, ["X:1"]) == {"X:1": {A: 0.9}}
    with pytest.raises(MisalignedReferencesError):
        predictions_for(corpus, ["X:1", "Y:1"])


def test_self_agreement_run():
    corpus = corpus_of(
        verse("X", 1, {A: 1.0, B: 1.0}),
        verse("X", 2, {A: 1.0}),
        verse("X", 3),
        verse("X", 4, {B: 1.0}),
    )
    duals = [_dual(v.verse_ref, v.labels, v.labels) for v in corpus.verses]
    report = run_validation(duals, corpus)
    assert report.macro_kappa == pytest.approx(1.0)
    assert report.macro_prf == {"precision": 1.0, "recall": 1.0, "f1": 1.0}
    assert report.n_instances == 4
    assert report.ece_raw == 0.0
    assert report.temperature.boundary
    summary = report.summary_frame().set_index("metric")["value"]
    assert summary["abstention_appropriateness"] == 1.0
    assert set(report.calibration_frame()["stage"]) == {"raw", "calibrated"}
    assert len(report.coverage_frame()) == 5
