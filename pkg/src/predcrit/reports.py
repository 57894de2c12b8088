"""Assembly of the two headline reports: the three-model schools table and
the election-regression summary.

These live outside the CLI so tests and other callers get the exact same
numbers the command line prints. All randomness derives from one master
seed via fixed stream indices.
"""
from __future__ import annotations

import csv

from .criteria import PointEstimateLogLik, criterion_report, lpd_posterior_summary, p_dic
from .loo import loo_report
from .models import (
    EightSchoolsData,
    RegressionData,
    RegressionModel,
    SchoolsModel,
    default_eight_schools,
    default_election,
    regression_fit,
    schools_fit,
)
from .models.schools import POOLING_MODES, schools_mle
from .seeds import derive_seed

__all__ = [
    "schools_table_report",
    "election_report",
    "write_histogram_csv",
    "UNDEFINED_AIC_HIERARCHICAL",
    "UNDEFINED_LOO_NO_POOLING",
]

UNDEFINED_AIC_HIERARCHICAL = (
    "undefined: the hierarchical model has no maximum likelihood estimate"
)
UNDEFINED_LOO_NO_POOLING = (
    "undefined: prediction for a held-out school is impossible without pooling"
)

_TABLE_ROWS = (
    "minus2_lpd_mle",
    "k",
    "aic",
    "minus2_lpd_mean",
    "p_dic",
    "dic",
    "minus2_lppd",
    "p_waic1",
    "p_waic2",
    "waic",
    "p_loo",
    "minus2_lppd_loo",
)


def schools_table_report(
    data: EightSchoolsData | None = None,
    draws: int = 100_000,
    seed: int = 12345,
    waic_variant: int = 2,
) -> dict:
    """Deviance table for no pooling / complete pooling / hierarchical.

    Cells that are undefined for a model carry an explicit
    "undefined: <reason>" string instead of a number.
    """
    base = data if data is not None else default_eight_schools()
    columns = list(POOLING_MODES)
    rows = {name: {} for name in _TABLE_ROWS}

    for col_idx, mode in enumerate(columns):
        d = base.with_mode(mode)
        fit = schools_fit(d, draws, derive_seed(seed, col_idx))
        mat = fit.pointwise_loglik()

        if mode == "hierarchical":
            rows["minus2_lpd_mle"][mode] = UNDEFINED_AIC_HIERARCHICAL
            rows["k"][mode] = UNDEFINED_AIC_HIERARCHICAL
            rows["aic"][mode] = UNDEFINED_AIC_HIERARCHICAL
        else:
            lpd_mle, k = schools_mle(d)
            rows["minus2_lpd_mle"][mode] = -2.0 * lpd_mle
            rows["k"][mode] = float(k)
            rows["aic"][mode] = -2.0 * (lpd_mle - k)

        lpd_mean = fit.lpd_at_posterior_mean()
        pd = p_dic(lpd_mean, mat)
        rows["minus2_lpd_mean"][mode] = -2.0 * lpd_mean
        rows["p_dic"][mode] = pd
        rows["dic"][mode] = -2.0 * (lpd_mean - pd)

        rep = criterion_report(mat, waic_variant=waic_variant)
        rows["minus2_lppd"][mode] = -2.0 * rep.lppd
        rows["p_waic1"][mode] = rep.p_waic1
        rows["p_waic2"][mode] = rep.p_waic2
        rows["waic"][mode] = rep.waic

        if mode == "no_pooling":
            rows["p_loo"][mode] = UNDEFINED_LOO_NO_POOLING
            rows["minus2_lppd_loo"][mode] = UNDEFINED_LOO_NO_POOLING
        else:
            loo = loo_report(
                SchoolsModel(), d, rep.lppd, draws=draws, seed=derive_seed(seed, 10 + col_idx)
            )
            rows["p_loo"][mode] = loo.p_loo
            rows["minus2_lppd_loo"][mode] = -2.0 * loo.lppd_loo

    return {
        "draws": draws,
        "seed": seed,
        "waic_variant": waic_variant,
        "columns": columns,
        "rows": rows,
    }


def election_report(
    data: RegressionData | None = None,
    draws: int = 100_000,
    seed: int = 12345,
    waic_variant: int = 2,
    dic_parameterization: str = "log_sigma",
    bins: int = 30,
) -> dict:
    """Full regression summary: fit, criteria, exact LOO, and the posterior
    distribution of the total log density (histogram included)."""
    d = data if data is not None else default_election()
    fit = regression_fit(d, draws, derive_seed(seed, 0))
    a_mle, b_mle, sigma_mle = fit.mle
    mle = PointEstimateLogLik(fit.mle_loglik(), "mle", k=3)
    lpd_mean = fit.lpd_at_posterior_mean(dic_parameterization)
    mat = fit.pointwise_loglik()
    rep = criterion_report(mat, lpd_at_mean=lpd_mean, mle=mle, waic_variant=waic_variant)
    summary = lpd_posterior_summary(mat.row_totals(), bins=bins)
    loo = loo_report(RegressionModel(), d, rep.lppd, draws=draws, seed=derive_seed(seed, 1))

    return {
        "draws": draws,
        "seed": seed,
        "waic_variant": waic_variant,
        "dic_parameterization": dic_parameterization,
        "n": len(d),
        "mle": {"a": a_mle, "b": b_mle, "sigma": sigma_mle},
        "posterior_means": fit.posterior_means,
        "criteria": rep.to_dict(),
        "loo": loo.to_dict(),
        "lpd_posterior": {
            "mean": summary.mean,
            "max": summary.max,
            "gap": summary.gap,
            "bin_left": summary.bin_left.tolist(),
            "counts": summary.counts.tolist(),
        },
    }


def write_histogram_csv(bin_left, counts, target) -> None:
    """Two-column plot data: bin_left,count."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write_histogram_csv(bin_left, counts, fh)
            return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["bin_left", "count"])
    for left, count in zip(bin_left, counts):
        writer.writerow([repr(float(left)), int(count)])
