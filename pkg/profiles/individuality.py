"""Poet-level individuality tables: divergence rankings, policy robustness, selection bias."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from corpus.errors import DegenerateInputError
from corpus.schema import Corpus
from profiles.aggregate import (
    EPSILON,
    PoetConceptMatrix,
    augment_with_abstain,
    concept_lift,
    concept_totals,
    global_baseline,
    poet_concept_mass,
    poet_distributions,
)
from profiles.policies import POLICY_CONFIG, WeightPolicy, get_policy
from stats.bootstrap import bootstrap_rank_correlation
from stats.correlation import pearson_r, rank_descending, spearman_rho
from stats.divergence import divergence_report, js_divergence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankStability:
    rho: float
    p_value: float
    ci_lo: float
    ci_hi: float
    valid_replicates: int


def _verse_counts(corpus: Corpus) -> pd.DataFrame:
    rows = []
    for poet in corpus.poets:
        vs = corpus.by_poet(poet)
        n_abs = sum(v.abstain for v in vs)
        rows.append(
            {
                "poet": poet,
                "verses": len(vs),
                "abstained": n_abs,
                "abstain_rate": n_abs / len(vs) if vs else 0.0,
            }
        )
    return pd.DataFrame(rows, columns=["poet", "verses", "abstained", "abstain_rate"])


def profile_table(
    corpus: Corpus,
    matrix: PoetConceptMatrix | None = None,
    epsilon: float = EPSILON,
) -> pd.DataFrame:
    """
    One row per poet: verse counts, abstain rate, label mass and D_KL / D_JS /
    cosine distance to the pooled baseline, ranked by D_JS (1 = most distinctive).
    """
    matrix = matrix if matrix is not None else poet_concept_mass(corpus)
    baseline = global_baseline(matrix, epsilon)
    dists = poet_distributions(matrix, epsilon)
    rows = []
    for i, poet in enumerate(matrix.poets):
        rep = divergence_report(poet, dists[poet], baseline)
        rows.append(
            {
                "poet": poet,
                "mass": float(matrix.mass[i].sum()),
                "kl": rep.kl,
                "js": rep.js,
                "cosine_distance": rep.cosine_distance,
            }
        )
    table = _verse_counts(corpus).merge(pd.DataFrame(rows), on="poet", how="right")
    table["rank_js"] = rank_descending(table["js"].to_numpy())
    return table.sort_values(["rank_js", "poet"], kind="mergesort").reset_index(drop=True)


def lift_table(matrix: PoetConceptMatrix, epsilon: float = EPSILON) -> pd.DataFrame:
    """Long table poet, concept, p_poet, p_baseline, lift."""
    baseline = global_baseline(matrix, epsilon)
    rows = []
    for poet, dist in poet_distributions(matrix, epsilon).items():
        lift = concept_lift(dist, baseline)
        for j, c in enumerate(matrix.concepts):
            rows.append(
                {
                    "poet": poet,
                    "concept": c,
                    "p_poet": float(dist.probs[j]),
                    "p_baseline": float(baseline.probs[j]),
                    "lift": float(lift.delta[j]),
                }
            )
    return pd.DataFrame(rows, columns=["poet", "concept", "p_poet", "p_baseline", "lift"])


def _presets(names: Sequence[str] | None) -> dict[str, WeightPolicy]:
    return {n: get_policy(n) for n in (names or list(POLICY_CONFIG))}


def policy_shares(corpus: Corpus, presets: Sequence[str] | None = None) -> pd.DataFrame:
    """Global concept share under each weighting preset; one column per preset."""
    out = pd.DataFrame()
    for name, policy in _presets(presets).items():
        totals = concept_totals(poet_concept_mass(corpus, policy))
        if out.empty:
            out["concept"] = totals["concept"]
        out[name] = totals["share"].to_numpy()
    return out


def policy_divergence(
    corpus: Corpus,
    presets: Sequence[str] | None = None,
    epsilon: float = EPSILON,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Per-poet D_JS under each preset, and Spearman rho of each preset's ranking
    against the first preset (normally `base`).
    """
    policies = _presets(presets)
    table = pd.DataFrame({"poet": list(corpus.poets)})
    for name, policy in policies.items():
        matrix = poet_concept_mass(corpus, policy)
        baseline = global_baseline(matrix, epsilon)
        dists = poet_distributions(matrix, epsilon)
        table[name] = [js_divergence(dists[p], baseline) for p in matrix.poets]

    names = list(policies)
    ref = names[0]
    rows = []
    for name in names[1:]:
        try:
            res = spearman_rho(table[ref], table[name])
            rows.append({"preset": name, "against": ref, "rho": res.rho, "p_value": res.p_value})
        except DegenerateInputError as exc:
            logger.warning("rank robustness %s vs %s skipped: %s", name, ref, exc)
            rows.append({"preset": name, "against": ref, "rho": np.nan, "p_value": np.nan})
    return table, pd.DataFrame(rows, columns=["preset", "against", "rho", "p_value"])


def selection_bias_table(
    corpus: Corpus,
    policy: WeightPolicy | None = None,
    replicates: int = 1000,
    seed: int = 0,
    epsilon: float = EPSILON,
) -> tuple[pd.DataFrame, RankStability | None]:
    """
    Abstention as an explicit category: D_JS with and without the ABSTAIN column.

    rank_change = rank_augmented - rank_base (negative = poet moves up).
    The stability record is None when there are fewer than 3 poets.
    """
    policy = policy or WeightPolicy()
    base = poet_concept_mass(corpus, policy)
    aug = augment_with_abstain(corpus, policy)
    b0, a0 = global_baseline(base, epsilon), global_baseline(aug, epsilon)
    bd, ad = poet_distributions(base, epsilon), poet_distributions(aug, epsilon)

    table = _verse_counts(corpus)[["poet", "abstain_rate"]].copy()
    table["js_base"] = [js_divergence(bd[p], b0) for p in table["poet"]]
    table["js_augmented"] = [js_divergence(ad[p], a0) for p in table["poet"]]
    table["rank_base"] = rank_descending(table["js_base"].to_numpy())
    table["rank_augmented"] = rank_descending(table["js_augmented"].to_numpy())
    table["rank_change"] = table["rank_augmented"] - table["rank_base"]

    if len(table) < 3:
        return table, None
    try:
        res = spearman_rho(table["js_base"], table["js_augmented"])
        lo, hi, valid = bootstrap_rank_correlation(
            table["js_base"], table["js_augmented"], replicates=replicates, seed=seed
        )
    except DegenerateInputError as exc:
        logger.warning("selection bias: rank stability undefined: %s", exc)
        return table, None
    return table, RankStability(res.rho, res.p_value, lo, hi, valid)


def abstention_divergence_correlation(profile: pd.DataFrame) -> pd.DataFrame:
    """Pearson r of D_JS against abstain rate and against verse count."""
    rows = []
    for col in ("abstain_rate", "verses"):
        try:
            res = pearson_r(profile[col].astype(float), profile["js"])
        except DegenerateInputError as exc:
            logger.warning("correlation %s vs js undefined: %s", col, exc)
            continue
        rows.append(
            {
                "x": col,
                "y": "js",
                "r": res.r,
                "t_stat": res.t_stat,
                "df": len(profile) - 2,
                "p_value": res.p_value,
                "ci_lo": res.ci95[0],
                "ci_hi": res.ci95[1],
            }
        )
    columns = ["x", "y", "r", "t_stat", "df", "p_value", "ci_lo", "ci_hi"]
    return pd.DataFrame(rows, columns=columns)


def divergence_rank_agreement(profile: pd.DataFrame) -> pd.DataFrame:
    """
    Spearman rho between the D_JS ranking and the rankings by cosine distance and D_KL.

    Needs at least 3 poets; a measure that is constant across poets gets NaN.
    """
    rows = []
    for col in ("cosine_distance", "kl"):
        try:
            res = spearman_rho(profile["js"], profile[col])
            rho, p_value = res.rho, res.p_value
        except DegenerateInputError as exc:
            logger.warning("rank agreement js vs %s undefined: %s", col, exc)
            rho, p_value = np.nan, np.nan
        rows.append({"measure": col, "against": "js", "rho": rho, "p_value": p_value})
    return pd.DataFrame(rows, columns=["measure", "against", "rho", "p_value"])
