"""Information criteria computed from draw matrices and point-estimate fits.

Estimates of expected out-of-sample predictive accuracy start from a
within-sample fit measure and subtract an effective-parameter correction:

  elpd_aic    = log p(y | theta_mle)  - k
  elpd_dic    = log p(y | theta_mean) - p_dic
  elppd_waic  = lppd                  - p_waic

Deviance-scale values multiply by -2. Both WAIC penalty variants are
always computed; the difference form (variant 1) mirrors the DIC
construction, the pointwise-variance form (variant 2) is the default
reported on the deviance scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .draws import (
    PointwiseLogLikMatrix,
    lppd,
    lppd_mc_se,
    mean_total_loglik,
    sample_variance,
)

__all__ = [
    "PointEstimateLogLik",
    "CriterionReport",
    "LpdPosteriorSummary",
    "aic",
    "bic",
    "p_dic",
    "p_dic_alt",
    "p_waic1",
    "p_waic2",
    "waic",
    "lpd_posterior_summary",
    "criterion_report",
]


@dataclass(frozen=True)
class PointEstimateLogLik:
    """Total log density of the data at a point estimate.

    `estimate_kind` records which estimate produced it ("mle" or
    "posterior_mean"); `k` is the count of estimated parameters and is
    required for the AIC/BIC penalty.
    """

    total_loglik: float
    estimate_kind: str
    k: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.total_loglik):
            raise ValueError("point-estimate log likelihood must be finite")
        if self.estimate_kind not in ("mle", "posterior_mean"):
            raise ValueError(f"unknown estimate kind: {self.estimate_kind!r}")
        if self.k is not None and self.k < 0:
            raise ValueError("parameter count k must be nonnegative")
        if self.estimate_kind == "mle" and self.k is None:
            raise ValueError("parameter count k is required for an MLE estimate")


def aic(pe: PointEstimateLogLik) -> tuple[float, float]:
    """(elpd_aic, AIC): penalized plug-in fit and its deviance scale."""
    if pe.estimate_kind != "mle":
        raise ValueError("AIC requires the maximum likelihood estimate")
    elpd = pe.total_loglik - pe.k
    return elpd, -2.0 * elpd


def bic(pe: PointEstimateLogLik, n: int) -> float:
    """-2 log p(y|theta_mle) + k log n."""
    if pe.estimate_kind != "mle":
        raise ValueError("BIC requires the maximum likelihood estimate")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be an integer >= 1")
    return -2.0 * pe.total_loglik + pe.k * math.log(n)


def p_dic(lpd_at_mean: float, m: PointwiseLogLikMatrix) -> float:
    """Effective parameters: 2 (log p(y|theta_mean) - E_post log p(y|theta)).

    Can come out negative when the posterior mean is far from the mode;
    callers should surface that as a warning, not clamp it.
    """
    if not math.isfinite(lpd_at_mean):
        raise ValueError("lpd_at_mean must be finite")
    return 2.0 * (lpd_at_mean - mean_total_loglik(m))


def p_dic_alt(row_totals) -> float:
    """Variance form: 2 Var_post of the per-draw total log likelihood."""
    return 2.0 * sample_variance(row_totals)


def p_waic1(m: PointwiseLogLikMatrix) -> float:
    """2 sum_i (log E_post p(y_i|theta) - E_post log p(y_i|theta)).

    Nonnegative by Jensen's inequality.
    """
    vals = m.values
    shift = vals.max(axis=0)
    lme = shift + np.log(np.exp(vals - shift).mean(axis=0))
    return float(2.0 * (lme - vals.mean(axis=0)).sum())


def p_waic2(m: PointwiseLogLikMatrix) -> float:
    """Sum over points of the sample variance of log p(y_i|theta^s)."""
    if m.n_draws < 2:
        raise ValueError("variance requires at least 2 draws")
    return float(m.values.var(axis=0, ddof=1).sum())


def waic(m: PointwiseLogLikMatrix, variant: int = 2) -> tuple[float, float]:
    """(elppd_waic, WAIC) for the chosen penalty variant."""
    if variant == 1:
        penalty = p_waic1(m)
    elif variant == 2:
        penalty = p_waic2(m)
    else:
        raise ValueError("WAIC variant must be 1 or 2")
    elppd = lppd(m) - penalty
    return elppd, -2.0 * elppd


@dataclass(frozen=True)
class LpdPosteriorSummary:
    """Summary of the posterior distribution of the total log density."""

    mean: float
    max: float
    gap: float
    bin_left: np.ndarray
    counts: np.ndarray

    def histogram_rows(self):
        return list(zip(self.bin_left.tolist(), self.counts.tolist()))


def lpd_posterior_summary(row_totals, bins: int = 30) -> LpdPosteriorSummary:
    """Mean, maximum, and gap of the per-draw total log density.

    The gap approaches k/2 for a k-parameter regular model at large n,
    which makes it a quick plausibility check on a fit. Also bins the
    draws (equal width over [min, max]) for plotting.
    """
    tot = np.asarray(row_totals, dtype=float).reshape(-1)
    if tot.size < 1:
        raise ValueError("empty draw column")
    mean = float(tot.mean())
    mx = float(tot.max())
    counts, edges = np.histogram(tot, bins=bins)
    return LpdPosteriorSummary(
        mean=mean, max=mx, gap=mx - mean, bin_left=edges[:-1], counts=counts
    )


def _influence_se(per_draw: np.ndarray) -> float:
    n = per_draw.size
    return float(math.sqrt(per_draw.var(ddof=1) / n))


@dataclass
class CriterionReport:
    """Assembled estimates for one draw matrix, plus Monte Carlo errors.

    Optional fields stay None when their inputs were not supplied (no
    point estimate) or cannot be computed (single draw). `waic` is on the
    deviance scale for the selected variant.
    """

    lppd: float
    p_waic1: float
    elppd_waic1: float
    p_waic2: float | None = None
    elppd_waic2: float | None = None
    waic: float | None = None
    waic_variant: int = 2
    lpd_at_mean: float | None = None
    lpd_at_mle: float | None = None
    k: int | None = None
    p_dic: float | None = None
    p_dic_alt: float | None = None
    elpd_aic: float | None = None
    elpd_dic: float | None = None
    aic: float | None = None
    dic: float | None = None
    bic: float | None = None
    mc_se_lppd: float | None = None
    mc_se_mean_loglik: float | None = None
    mc_se_p_dic: float | None = None
    mc_se_p_dic_alt: float | None = None
    mc_se_p_waic1: float | None = None
    mc_se_p_waic2: float | None = None
    mc_se_waic: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def criterion_report(
    m: PointwiseLogLikMatrix,
    lpd_at_mean: float | None = None,
    mle: PointEstimateLogLik | None = None,
    waic_variant: int = 2,
) -> CriterionReport:
    """Compute every criterion the inputs allow for one draw matrix.

    AIC and BIC need `mle` (with k); DIC needs `lpd_at_mean`. Variance
    based quantities (p_waic2, p_dic_alt, all Monte Carlo errors) need at
    least two draws and are marked unavailable otherwise.
    """
    if waic_variant not in (1, 2):
        raise ValueError("WAIC variant must be 1 or 2")
    warnings: list[str] = []
    vals = m.values
    shift = vals.max(axis=0)
    lme = shift + np.log(np.exp(vals - shift).mean(axis=0))
    mean_cols = vals.mean(axis=0)
    lppd_val = float(lme.sum())
    pw1 = float(2.0 * (lme - mean_cols).sum())
    report = CriterionReport(
        lppd=lppd_val,
        p_waic1=pw1,
        elppd_waic1=lppd_val - pw1,
        waic_variant=waic_variant,
    )

    have_variance = m.n_draws >= 2
    if have_variance:
        var_cols = vals.var(axis=0, ddof=1)
        report.p_waic2 = float(var_cols.sum())
        report.elppd_waic2 = lppd_val - report.p_waic2
        row_totals = m.row_totals()
        report.p_dic_alt = float(2.0 * row_totals.var(ddof=1))
        report.mc_se_lppd = lppd_mc_se(m)
        report.mc_se_mean_loglik = _influence_se(row_totals)
        report.mc_se_p_dic_alt = 2.0 * _influence_se(
            (row_totals - row_totals.mean()) ** 2
        )
        ratio = np.exp(vals - lme)
        report.mc_se_p_waic1 = 2.0 * _influence_se(
            ((ratio - 1.0) - (vals - mean_cols)).sum(axis=1)
        )
        dev2 = (vals - mean_cols) ** 2
        report.mc_se_p_waic2 = _influence_se((dev2 - var_cols).sum(axis=1))
        if waic_variant == 2:
            waic_influence = ((ratio - 1.0) - (dev2 - var_cols)).sum(axis=1)
        else:
            waic_influence = ((ratio - 1.0) - 2.0 * ((ratio - 1.0) - (vals - mean_cols))).sum(axis=1)
        report.mc_se_waic = 2.0 * _influence_se(waic_influence)
    else:
        warnings.append(
            "variance-based estimates (p_waic2, p_dic_alt, mc_se fields) "
            "require at least 2 draws and are unavailable"
        )

    if waic_variant == 2 and have_variance:
        report.waic = -2.0 * report.elppd_waic2
    elif waic_variant == 1:
        report.waic = -2.0 * report.elppd_waic1

    if lpd_at_mean is not None:
        report.lpd_at_mean = float(lpd_at_mean)
        pd = p_dic(lpd_at_mean, m)
        report.p_dic = pd
        report.elpd_dic = lpd_at_mean - pd
        report.dic = -2.0 * report.elpd_dic
        if have_variance:
            report.mc_se_p_dic = 2.0 * report.mc_se_mean_loglik
        if pd < 0:
            warnings.append(
                "negative p_dic: the posterior mean is far from the mode"
            )

    if mle is not None:
        elpd_a, aic_val = aic(mle)
        report.lpd_at_mle = mle.total_loglik
        report.k = mle.k
        report.elpd_aic = elpd_a
        report.aic = aic_val
        report.bic = bic(mle, m.n_points)

    report.warnings = warnings
    return report
