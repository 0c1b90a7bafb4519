"""
Pipeline stages behind the CLI subcommands.

Each stage reads its inputs from the run directory, writes CSVs under
`<out>/<stage>/` and returns the main in-memory result for callers and tests.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from annotation.backends import EchoAbstainBackend, ScriptedMockBackend, get_backend_class
from annotation.gateway import annotate_corpus
from app.config import RunConfig
from app.figures import (
    bar_svg,
    confidence_histogram,
    heatmap_svg,
    histogram_svg,
    line_svg,
    scatter_svg,
)
from app.reports import frame_table, print_table, summary_table, write_csv
from corpus.dedup import dedup_corpus, write_dedup_report
from corpus.errors import MissingStageError, NoEvidenceError, UsageError
from corpus.loader import (
    LABELS_SUFFIX,
    load_corpus,
    read_corpus_snapshot,
    serialize_record,
    write_corpus_snapshot,
    write_errors,
)
from corpus.ontology import CONCEPTS
from corpus.schema import Corpus, NormalizationPolicy
from corpus.summary import corpus_stats
from profiles.aggregate import (
    ConceptDistribution,
    concept_totals,
    global_baseline,
    poet_concept_mass,
    poet_distributions,
)
from profiles.individuality import (
    abstention_divergence_correlation,
    divergence_rank_agreement,
    lift_table,
    policy_divergence,
    policy_shares,
    profile_table,
    selection_bias_table,
)
from profiles.policies import WeightPolicy
from spectral.embedding import check_k_max, coordinate_correlation, embed_poets
from spectral.graph import build_cooccurrence, filter_concepts, top_edges
from spectral.model import SpectralModel, fit_spectral_model, resolve_kind
from spectral.retrieval import (
    Direction,
    hits_frame,
    mean_contributing_confidence,
    retrieve_by_label,
    retrieve_extremes,
    scores_frame,
)
from spectral.sensitivity import (
    align_coordinates,
    basis_correlation,
    match_modes,
    top_loadings_frame,
)
from stats.bootstrap import bootstrap_poet, summaries_frame
from validation.report import ValidationReport, run_validation
from validation.sampling import DEFAULT_STRATA, assign_strata, stratified_sample
from validation.sheet import load_validation_sheet, write_sample_sheet

logger = logging.getLogger(__name__)

SNAPSHOT = "corpus.jsonl"
RETRIEVAL_POOL = 500  # verses per axis for the weighting diagnostic
DIRECTIONS: tuple[Direction, ...] = ("positive", "negative")


def _require(cfg: RunConfig, stage: str, name: str) -> Path:
    path = cfg.out / stage / name
    if not path.exists():
        raise MissingStageError(stage, str(path))
    return path


def load_snapshot(cfg: RunConfig) -> Corpus:
    return read_corpus_snapshot(_require(cfg, "ingest", SNAPSHOT))


def _nonempty(corpus: Corpus, stage: str) -> Corpus:
    if len(corpus) == 0:
        raise UsageError(f"{stage}: the corpus snapshot holds no verses")
    return corpus


# --------------------------------------------------------------------------- ingest


def cmd_ingest(cfg: RunConfig) -> Corpus:
    if not cfg.inputs:
        raise UsageError("ingest: at least one input file or directory is required")
    policy = NormalizationPolicy(strip_diacritics_for_dedup=cfg.strip_diacritics_for_dedup)
    corpus, errors = load_corpus(
        cfg.inputs, strict=cfg.strict, policy=policy, max_workers=cfg.workers
    )
    out = cfg.stage_dir("ingest")
    if cfg.dedup:
        corpus, report = dedup_corpus(corpus, policy)
        write_dedup_report(report, out / "dedup_report.csv")
    if not cfg.strict:
        write_errors(errors, out / "errors.csv")

    write_corpus_snapshot(corpus, out / SNAPSHOT)
    stats = corpus_stats(corpus)
    write_csv(stats.to_frame(), out / "corpus_stats.csv", display_decimals=3)
    write_csv(stats.per_poet, out / "per_poet.csv", display_decimals=3)
    notes = pd.DataFrame(list(stats.top_abstention_notes), columns=["note", "count"])
    write_csv(notes, out / "abstention_notes.csv")

    print_table(
        summary_table(
            "Corpus",
            [
                ("poets", len(corpus.poets)),
                ("verses", stats.verses),
                ("abstain rate", stats.abstain_rate),
                ("label instances", stats.label_instances),
                ("labels / annotated verse", stats.labels_per_annotated_verse),
                ("confidence range", f"{stats.confidence_min:.2f}-{stats.confidence_max:.2f}"),
                ("skipped lines", len(errors)),
            ],
        )
    )
    return corpus


# -------------------------------------------------------------------------- profile


def cmd_profile(cfg: RunConfig) -> pd.DataFrame:
    corpus = _nonempty(load_snapshot(cfg), "profile")
    out = cfg.stage_dir("profile")
    matrix = poet_concept_mass(corpus, cfg.policy)
    baseline = global_baseline(matrix, cfg.epsilon)

    write_csv(matrix.to_frame().reset_index(), out / "matrix.csv", display_decimals=1)
    totals = concept_totals(matrix)
    totals["baseline"] = baseline.probs
    write_csv(totals, out / "concept_totals.csv", display_decimals=4)
    write_csv(lift_table(matrix, cfg.epsilon), out / "lifts.csv", display_decimals=4)

    profile = profile_table(corpus, matrix, cfg.epsilon)
    write_csv(profile, out / "divergence.csv", display_decimals=4)

    write_csv(policy_shares(corpus), out / "policy_shares.csv", display_decimals=4)
    by_policy, robustness = policy_divergence(corpus, epsilon=cfg.epsilon)
    write_csv(by_policy, out / "policy_divergence.csv", display_decimals=4)
    write_csv(robustness, out / "policy_rank_correlation.csv", display_decimals=3)

    if len(corpus.poets) >= 3:
        corr = abstention_divergence_correlation(profile)
        write_csv(corr, out / "correlations.csv", display_decimals=3)
        agreement = divergence_rank_agreement(profile)
        write_csv(agreement, out / "divergence_rank_agreement.csv", display_decimals=3)

    if cfg.augmented:
        table, stability = selection_bias_table(
            corpus, cfg.policy, replicates=cfg.replicates, seed=cfg.seed, epsilon=cfg.epsilon
        )
        write_csv(table, out / "selection_bias.csv", display_decimals=4)
        if stability is not None:
            row = {
                "rho": stability.rho,
                "p_value": stability.p_value,
                "ci_lo": stability.ci_lo,
                "ci_hi": stability.ci_hi,
                "valid_replicates": stability.valid_replicates,
                "replicates": cfg.replicates,
                "seed": cfg.seed,
            }
            write_csv(pd.DataFrame([row]), out / "rank_stability.csv", display_decimals=3)

    print_table(
        frame_table(
            f"Individuality ({cfg.policy.label})",
            profile,
            ["rank_js", "poet", "verses", "abstain_rate", "js", "kl", "cosine_distance"],
        )
    )
    return profile


# ------------------------------------------------------------------------- spectral


def _spectral_basis(
    corpus: Corpus, policy: WeightPolicy, min_share: float, kind: str, epsilon: float
) -> SpectralModel:
    matrix = poet_concept_mass(corpus, policy)
    baseline = global_baseline(matrix, epsilon)
    concepts = filter_concepts(baseline, min_share)
    return fit_spectral_model(build_cooccurrence(corpus, concepts, policy), kind)


def _policy_coords(
    corpus: Corpus, policy: WeightPolicy, model: SpectralModel, k_max: int, epsilon: float
) -> pd.DataFrame:
    matrix = poet_concept_mass(corpus, policy)
    baseline = global_baseline(matrix, epsilon)
    return embed_poets(poet_distributions(matrix, epsilon), baseline, model, k_max)


def _weighting_ablation(cfg: RunConfig, corpus: Corpus, model: SpectralModel) -> pd.DataFrame:
    """Confidence vs uniform weighting, compared axis by axis after mode matching."""
    conf = WeightPolicy("confidence", cfg.tau)
    unif = WeightPolicy("uniform", cfg.tau)
    if cfg.weight == "confidence":
        m_conf = model
    else:
        m_conf = _spectral_basis(corpus, conf, cfg.min_share, cfg.laplacian, cfg.epsilon)
    m_unif = _spectral_basis(corpus, unif, cfg.min_share, cfg.laplacian, cfg.epsilon)
    if set(m_conf.concepts) != set(m_unif.concepts):
        logger.warning("weighting ablation skipped: filtered concept sets differ")
        return pd.DataFrame()

    k_max = min(cfg.k_max, m_conf.n_modes - 1)
    corr = basis_correlation(m_conf, m_unif, k_max)
    matches = match_modes(m_conf, m_unif, k_max)
    coords_c = _policy_coords(corpus, conf, m_conf, k_max, cfg.epsilon)
    coords_u = _policy_coords(corpus, unif, m_unif, k_max, cfg.epsilon)
    coord_corr = coordinate_correlation(coords_c, align_coordinates(coords_u, matches))
    rows = []
    for k, m in zip(range(1, k_max + 1), matches):
        top_c = retrieve_extremes(corpus, m_conf, k, "absolute", RETRIEVAL_POOL, conf)
        top_u = retrieve_extremes(corpus, m_unif, k, "absolute", RETRIEVAL_POOL, unif)
        rows.append(
            {
                "axis": k,
                "basis_abs_corr": corr[k - 1],
                "matched_axis": m.axis_b,
                "matched_abs_corr": m.correlation,
                "coord_corr": coord_corr.get(f"em{k}", float("nan")),
                "mean_conf_confidence": mean_contributing_confidence(top_c),
                "mean_conf_uniform": mean_contributing_confidence(top_u),
            }
        )
    return pd.DataFrame(rows)


def _bootstrap(
    cfg: RunConfig, corpus: Corpus, model: SpectralModel, baseline: ConceptDistribution
) -> pd.DataFrame:
    poets: Sequence[str] = cfg.bootstrap_poets
    if "all" in poets:
        poets = corpus.poets
    statistics = ["D_JS"] + [f"EM{k}" for k in range(1, cfg.k_max + 1)]
    summaries = []
    for poet in poets:
        if poet not in corpus.poets:
            raise UsageError(f"bootstrap: unknown poet '{poet}'")
        for stat in statistics:
            try:
                summaries.append(
                    bootstrap_poet(
                        corpus,
                        poet,
                        statistic=stat,
                        replicates=cfg.replicates,
                        seed=cfg.seed,
                        fixed_baseline=baseline,
                        fixed_basis=model,
                        policy=cfg.policy,
                        max_workers=cfg.workers,
                    )
                )
            except NoEvidenceError as exc:
                logger.warning("[SKIP] bootstrap %s: %s", poet, exc)
                break
    return summaries_frame(summaries)


def cmd_spectral(cfg: RunConfig) -> SpectralModel:
    corpus = _nonempty(load_snapshot(cfg), "spectral")
    out = cfg.stage_dir("spectral")
    policy = cfg.policy
    matrix = poet_concept_mass(corpus, policy)
    baseline = global_baseline(matrix, cfg.epsilon)
    concepts = filter_concepts(baseline, cfg.min_share)
    graph = build_cooccurrence(corpus, concepts, policy)
    model = fit_spectral_model(graph, cfg.laplacian)
    k_max = check_k_max(model, cfg.k_max)

    kept = pd.DataFrame(
        {
            "concept": list(baseline.concepts),
            "baseline": baseline.probs,
            "kept": [c in concepts for c in baseline.concepts],
        }
    )
    write_csv(kept, out / "concepts.csv", display_decimals=4)
    write_csv(top_edges(graph, n=None), out / "graph_edges.csv", display_decimals=1)
    write_csv(graph.to_frame().reset_index(names="concept"), out / "adjacency.csv")
    write_csv(model.eigenvalues_frame(), out / "eigenvalues.csv", display_decimals=3)
    write_csv(model.loadings_frame().reset_index(), out / "loadings.csv", display_decimals=3)
    write_csv(top_loadings_frame(model, k_max), out / "top_loadings.csv", display_decimals=3)

    coords = embed_poets(poet_distributions(matrix, cfg.epsilon), baseline, model, k_max)
    write_csv(coords, out / "coords.csv", display_decimals=3)

    retrieval = out / "retrieval"
    for k in range(1, k_max + 1):
        for direction in DIRECTIONS:
            scored = retrieve_extremes(corpus, model, k, direction, cfg.top_n)
            write_csv(scores_frame(scored), retrieval / f"em{k}_{direction}.csv")
    for concept in CONCEPTS:
        hits = retrieve_by_label(corpus, concept, cfg.top_n)
        write_csv(hits_frame(hits), retrieval / f"label_{concept}.csv")

    ablation = _weighting_ablation(cfg, corpus, model)
    if not ablation.empty:
        write_csv(ablation, out / "weighting_ablation.csv", display_decimals=3)

    other = "sym" if resolve_kind(cfg.laplacian) == "unnormalized" else "unnorm"
    alt = fit_spectral_model(graph, other)
    modes = match_modes(model, alt, k_max)
    matches = pd.DataFrame(
        [
            {
                "axis": m.axis_a,
                "matched_axis": m.axis_b,
                "abs_corr": m.correlation,
                "sign": m.sign,
                "eigenvalue": float(model.eigenvalues[m.axis_a]),
                "matched_eigenvalue": float(alt.eigenvalues[m.axis_b]),
            }
            for m in modes
        ]
    )
    write_csv(matches, out / "mode_matching.csv", display_decimals=3)
    alt_coords = embed_poets(poet_distributions(matrix, cfg.epsilon), baseline, alt, k_max)
    coord_corr = coordinate_correlation(coords, align_coordinates(alt_coords, modes))
    write_csv(
        pd.DataFrame({"axis": list(coord_corr), "corr": list(coord_corr.values())}),
        out / "coordinate_sensitivity.csv",
        display_decimals=3,
    )

    if cfg.bootstrap_poets:
        boot = _bootstrap(cfg, corpus, model, baseline)
        write_csv(boot, out / "bootstrap.csv", display_decimals=3)

    print_table(
        summary_table(
            f"Spectral basis ({model.laplacian_kind})",
            [("concepts", len(concepts))]
            + [(f"lambda_{k}", float(model.eigenvalues[k])) for k in range(0, k_max + 1)],
        )
    )
    return model


# ------------------------------------------------------------------------- validate


def cmd_validate(cfg: RunConfig) -> ValidationReport:
    if not cfg.sheet:
        raise UsageError("validate: --sheet is required")
    sheet = Path(cfg.sheet)
    if not sheet.exists():
        raise FileNotFoundError(f"Missing validation sheet: {sheet}")
    corpus = load_snapshot(cfg)
    duals = load_validation_sheet(sheet)
    report = run_validation(duals, corpus, min_prevalence=cfg.min_prevalence)

    out = cfg.stage_dir("validate")
    write_csv(report.agreement, out / "agreement.csv", display_decimals=3)
    write_csv(report.precision, out / "precision.csv", display_decimals=3)
    write_csv(report.prf, out / "prf1.csv", display_decimals=3)
    write_csv(report.calibration_frame(), out / "calibration.csv", display_decimals=3)
    write_csv(report.coverage_frame(), out / "coverage_risk.csv", display_decimals=3)
    summary = report.summary_frame()
    write_csv(summary, out / "summary.csv", display_decimals=4)

    print_table(summary_table("Validation", summary.itertuples(index=False, name=None)))
    return report


# --------------------------------------------------------------------------- report


def _heatmap(matrix_csv: Path) -> pd.DataFrame:
    df = pd.read_csv(matrix_csv).set_index("poet")
    totals = df.sum(axis=1).replace(0.0, np.nan)
    return df.div(totals, axis=0).fillna(0.0)


def cmd_report(cfg: RunConfig) -> dict[str, Path]:
    """
    Figure data series, one CSV each: confidence_histogram, abstention_by_poet,
    divergence_by_poet, abstention_vs_js, poet_concept_heatmap and em2_em3_scatter.
    When validate outputs exist, reliability and coverage_risk are added.
    """
    corpus = load_snapshot(cfg)
    per_poet = pd.read_csv(_require(cfg, "ingest", "per_poet.csv"))
    divergence = pd.read_csv(_require(cfg, "profile", "divergence.csv"))
    matrix_csv = _require(cfg, "profile", "matrix.csv")
    coords = pd.read_csv(_require(cfg, "spectral", "coords.csv"))
    if "em3" not in coords:
        raise UsageError("report: coordinates lack em3; rerun spectral with --k-max >= 3")

    out = cfg.stage_dir("report")
    conf = np.array([p for v in corpus.annotated() for p in v.confidences.values()])
    series: dict[str, pd.DataFrame] = {
        "confidence_histogram": confidence_histogram(conf),
        "abstention_by_poet": per_poet[["poet", "verses", "abstained", "abstain_rate"]],
        "divergence_by_poet": divergence[["poet", "js", "rank_js"]],
        "abstention_vs_js": divergence[["poet", "abstain_rate", "js", "verses"]],
        "poet_concept_heatmap": _heatmap(matrix_csv).reset_index(),
        "em2_em3_scatter": coords[["poet", "em2", "em3"]]
        .merge(divergence[["poet", "verses", "js"]], on="poet")
        .rename(columns={"verses": "verse_count", "js": "d_js"}),
    }
    calibration = cfg.out / "validate" / "calibration.csv"
    if calibration.exists():
        cal = pd.read_csv(calibration)
        series["reliability"] = cal[cal["stage"] == "calibrated"].drop(columns="stage")
        series["coverage_risk"] = pd.read_csv(cfg.out / "validate" / "coverage_risk.csv")

    written = {name: write_csv(df, out / f"{name}.csv") for name, df in series.items()}

    if cfg.render_svg:
        svg = out / "svg"
        histogram_svg(series["confidence_histogram"], svg / "confidence_histogram.svg")
        bar_svg(series["abstention_by_poet"], "poet", "abstain_rate", svg / "abstention.svg")
        bar_svg(series["divergence_by_poet"], "poet", "js", svg / "divergence.svg")
        scatter_svg(series["abstention_vs_js"], "abstain_rate", "js", svg / "abstain_js.svg")
        heatmap_svg(_heatmap(matrix_csv), svg / "poet_concept_heatmap.svg")
        scatter_svg(series["em2_em3_scatter"], "em2", "em3", svg / "em2_em3.svg")
        if "coverage_risk" in series:
            cov = series["coverage_risk"].dropna(subset=["risk"])
            line_svg(cov, "coverage", "risk", svg / "coverage_risk.svg")
            line_svg(series["reliability"], "mean_conf", "accuracy", svg / "reliability.svg")

    logger.info("[OK] report: %d figure series in %s", len(written), out)
    return written


# ------------------------------------------------------------------- annotate / sample


def cmd_annotate_mock(
    cfg: RunConfig,
    poet: str,
    fixture: str | None = None,
    backend_name: str = "scripted_mock",
) -> Path:
    """Annotate plain-text verses (one per line) with a mock backend."""
    if len(cfg.inputs) != 1:
        raise UsageError("annotate-mock: exactly one verse file is required")
    src = Path(cfg.inputs[0])
    if not src.exists():
        raise FileNotFoundError(f"Missing verse file: {src}")
    texts = [line.strip() for line in src.read_text(encoding="utf-8").splitlines()]
    texts = [t for t in texts if t]

    backend_cls = get_backend_class(backend_name)
    if backend_cls is ScriptedMockBackend:
        if not fixture:
            raise UsageError("annotate-mock: --fixture is required for scripted_mock")
        backend = ScriptedMockBackend.from_fixture(fixture)
    else:
        backend = EchoAbstainBackend()

    results = annotate_corpus(texts, backend, poet=poet, max_workers=1)
    out = cfg.stage_dir("annotate")
    target = out / f"{poet}{LABELS_SUFFIX}"
    with target.open("w", encoding="utf-8") as fh:
        for verse, _ in results:
            fh.write(serialize_record(verse) + "\n")

    attempts = pd.DataFrame(
        [
            {
                "poet": poet,
                "line": verse.source_line,
                "attempt": n,
                "valid": rec.valid,
                "error": rec.error,
                "final_status": log.final_status,
            }
            for verse, log in results
            for n, rec in enumerate(log.attempts, start=1)
        ],
        columns=["poet", "line", "attempt", "valid", "error", "final_status"],
    )
    write_csv(attempts, out / f"{poet}_attempts.csv")
    exhausted = sum(log.final_status == "exhausted" for _, log in results)
    logger.info("[OK] annotated %d verses (%d exhausted) -> %s", len(results), exhausted, target)
    return target


def cmd_sample(cfg: RunConfig) -> list[str]:
    corpus = _nonempty(load_snapshot(cfg), "sample")
    refs = stratified_sample(corpus, total=cfg.sample_size, seed=cfg.seed)
    out = cfg.stage_dir("sample")
    write_sample_sheet(refs, corpus, out / "validation_sheet.csv")

    chosen = set(refs)
    members = assign_strata(corpus, DEFAULT_STRATA)
    strata = pd.DataFrame(
        [
            {
                "stratum": spec.name,
                "population": len(m),
                "sampled": sum(corpus.verses[i].verse_ref in chosen for i in m),
            }
            for spec, m in zip(DEFAULT_STRATA, members)
        ]
    )
    write_csv(strata, out / "strata.csv")
    print_table(frame_table("Validation sample", strata))
    return refs
