"""Command-line entry point.

Exit codes: 0 success, 2 malformed input, 3 non-finite log densities,
4 model refusal (e.g. LOO under no pooling). All randomness in a run
derives from the single --seed flag; reports echo seed and draw count.
"""
from __future__ import annotations

import functools
import io
import json
import sys

import click
import numpy as np

from .criteria import PointEstimateLogLik, criterion_report
from .draws import read_loglik_csv
from .errors import MatrixFormatError, ModelRefusalError, NonFiniteLogLikError
from .expectation import (
    ESTIMATOR_NAMES,
    _LOO_NAMES,
    ReplicationPlan,
    bias_curve,
    run_expectation_study,
    write_bias_curve_csv,
)
from .loo import loo_report
from .models import (
    NormalMeanModel,
    NormalMeanSpec,
    RegressionModel,
    SchoolsModel,
    balanced_group_posterior_draws,
    balanced_hierarchical_loglik,
    default_eight_schools,
    default_election,
    load_balanced_csv,
    load_election_csv,
    load_schools_csv,
    regression_fit,
    schools_fit,
)
from . import oracle as oracle_mod
from .reports import election_report, schools_table_report, write_histogram_csv
from .seeds import derive_seed

EXIT_FORMAT = 2
EXIT_NUMERIC = 3
EXIT_REFUSAL = 4

MODEL_CHOICES = ("normal-mean", "regression", "schools", "balanced")


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MatrixFormatError as exc:
            click.echo(f"input format error: {exc}", err=True)
            sys.exit(EXIT_FORMAT)
        except NonFiniteLogLikError as exc:
            click.echo(f"numeric validity error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except ModelRefusalError as exc:
            click.echo(f"model refusal: {exc}", err=True)
            sys.exit(EXIT_REFUSAL)
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_FORMAT)

    return wrapper


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        click.echo(text)


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.4f}"


def _render_flat_table(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k.ljust(width)}  {_fmt_cell(v)}" for k, v in pairs)


def _render_flat_csv(pairs) -> str:
    lines = ["name,value"]
    for k, v in pairs:
        lines.append(f"{k},{v if isinstance(v, str) else repr(float(v))}")
    return "\n".join(lines)


def _emit_pairs(pairs, fmt, output, footer: str = "") -> None:
    text = _render_flat_csv(pairs) if fmt == "csv" else _render_flat_table(pairs)
    _emit(text + footer, output)


def _json_dumps(payload) -> str:
    return json.dumps(payload, indent=2)


draws_option = click.option(
    "--draws", "-S", type=int, default=100_000, show_default=True, help="posterior draws per fit"
)
seed_option = click.option(
    "--seed", type=int, default=12345, show_default=True, help="master seed; all streams derive from it"
)
format_option = click.option(
    "--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table",
    show_default=True,
)
output_option = click.option("--output", type=click.Path(), default=None, help="write to file instead of stdout")
waic_option = click.option(
    "--waic-variant", type=click.Choice(["1", "2"]), default="2", show_default=True,
    help="penalty used for the deviance-scale WAIC",
)


@click.group()
@click.version_option(package_name="predcrit")
def main():
    """Predictive-accuracy estimates from posterior draws."""


# ---------------------------------------------------------------------------
@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lpd-at-mean", type=float, default=None, help="log p(y | posterior mean), enables DIC")
@click.option("--mle-loglik", type=float, default=None, help="log p(y | MLE), enables AIC/BIC (needs --k)")
@click.option("--k", type=int, default=None, help="number of parameters at the MLE")
@waic_option
@format_option
@output_option
@_handle_errors
def criteria(input_path, lpd_at_mean, mle_loglik, k, waic_variant, fmt, output):
    """Criteria from a pointwise log-likelihood CSV (rows = draws)."""
    mat = read_loglik_csv(input_path)
    mle = None
    if mle_loglik is not None:
        if k is None:
            raise ValueError("--mle-loglik requires --k")
        mle = PointEstimateLogLik(mle_loglik, "mle", k=k)
    rep = criterion_report(mat, lpd_at_mean=lpd_at_mean, mle=mle, waic_variant=int(waic_variant))
    payload = {"draws": mat.n_draws, "seed": None, "report": rep.to_dict()}
    if fmt == "json":
        _emit(_json_dumps(payload), output)
    else:
        pairs = [("draws", float(mat.n_draws)), ("points", float(mat.n_points))]
        pairs += [(name, v) for name, v in rep.to_dict().items() if isinstance(v, (int, float)) and v is not None]
        footer = "".join(f"\nwarning: {w}" for w in rep.warnings) if fmt == "table" else ""
        _emit_pairs(pairs, fmt, output, footer)


# ---------------------------------------------------------------------------
def _read_values(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().replace(",", "\n").split()
    if not tokens:
        raise MatrixFormatError("empty data file")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError:
        raise MatrixFormatError("data file must contain only numbers") from None


def _build_model(model, input_path, m, mu0, mode, prediction_mode):
    """(model object, data object) for the refittable built-in families."""
    if model == "balanced":
        raise ValueError("the balanced model supports `fit` only (known hyperparameters)")
    if model == "normal-mean":
        if input_path is None:
            raise ValueError("--input is required for the normal-mean model")
        return NormalMeanModel(m=m, mu0=mu0), _read_values(input_path)
    if model == "regression":
        data = load_election_csv(input_path) if input_path else default_election()
        return RegressionModel(), data
    data = load_schools_csv(input_path) if input_path else default_eight_schools()
    pred = "new_groups" if prediction_mode == "new" else "existing_groups"
    return SchoolsModel(), data.with_mode(mode, prediction_mode=pred)


model_options = [
    click.option("--model", type=click.Choice(MODEL_CHOICES), required=True),
    click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None),
    click.option("--m", type=float, default=0.0, show_default=True, help="prior precision (normal-mean)"),
    click.option("--mu0", type=float, default=0.0, show_default=True, help="prior mean (normal-mean)"),
    click.option("--mode", type=click.Choice(["no_pooling", "complete_pooling", "hierarchical"]),
                 default="hierarchical", show_default=True, help="pooling mode (schools)"),
    click.option("--prediction-mode", type=click.Choice(["existing", "new"]), default="existing",
                 show_default=True, help="replication target (schools)"),
    click.option("--mu", type=float, default=0.0, show_default=True,
                 help="known population mean (balanced)"),
    click.option("--tau", type=float, default=1.0, show_default=True,
                 help="known population sd (balanced)"),
    click.option("--counting", type=click.Choice(["observation", "group"]), default="observation",
                 show_default=True, help="what counts as one data point (balanced)"),
]


def _with_options(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


@main.command()
@_with_options(model_options)
@click.option("--dic-parameterization", type=click.Choice(["sigma", "sigma2", "log-sigma"]),
              default="log-sigma", show_default=True, help="scale point estimate for DIC (regression)")
@draws_option
@seed_option
@waic_option
@format_option
@output_option
@_handle_errors
def fit(model, input_path, m, mu0, mode, prediction_mode, mu, tau, counting,
        dic_parameterization, draws, seed, waic_variant, fmt, output):
    """Fit a built-in model and report its criteria."""
    if model == "balanced":
        if input_path is None:
            raise ValueError("--input is required for the balanced model")
        y = load_balanced_csv(input_path)
        theta = balanced_group_posterior_draws(y, mu=mu, tau=tau, draws=draws,
                                               seed=derive_seed(seed, 0))
        mat = balanced_hierarchical_loglik(theta, y, counting)
        rep = criterion_report(mat, waic_variant=int(waic_variant))
        payload = {
            "draws": draws, "seed": seed, "model": model, "counting": counting,
            "n_points": mat.n_points, "report": rep.to_dict(),
        }
        if fmt == "json":
            _emit(_json_dumps(payload), output)
        else:
            pairs = [("counting_points", float(mat.n_points))]
            pairs += [(k, v) for k, v in rep.to_dict().items()
                      if isinstance(v, (int, float)) and v is not None]
            _emit_pairs(pairs, fmt, output)
        return
    model_obj, data = _build_model(model, input_path, m, mu0, mode, prediction_mode)
    extras = {}
    if model == "regression":
        f = regression_fit(data, draws, derive_seed(seed, 0))
        mle = PointEstimateLogLik(f.mle_loglik(), "mle", k=3)
        lpd_mean = f.lpd_at_posterior_mean(dic_parameterization.replace("-", "_"))
        extras["mle"] = dict(zip(("a", "b", "sigma"), f.mle))
        extras["posterior_means"] = f.posterior_means
    elif model == "schools":
        f = schools_fit(data, draws, derive_seed(seed, 0))
        lpd_mean = f.lpd_at_posterior_mean()
        mle = None
        extras["theta_bayes"] = f.theta_bayes.tolist()
    else:
        f = model_obj.fit(data, draws=draws, seed=derive_seed(seed, 0))
        spec = NormalMeanSpec.from_data(np.asarray(data, dtype=float), m=m, mu0=mu0)
        lpd_mean = float(
            (-0.5 * np.log(2 * np.pi) - 0.5 * (np.asarray(data) - spec.posterior_mean) ** 2).sum()
        )
        mle = PointEstimateLogLik(
            float((-0.5 * np.log(2 * np.pi) - 0.5 * (np.asarray(data) - np.mean(data)) ** 2).sum()),
            "mle",
            k=1,
        )
        extras["posterior_mean_theta"] = f.posterior_mean_theta
    rep = criterion_report(f.pointwise_loglik(), lpd_at_mean=lpd_mean, mle=mle, waic_variant=int(waic_variant))
    payload = {"draws": draws, "seed": seed, "model": model, **extras, "report": rep.to_dict()}
    if fmt == "json":
        _emit(_json_dumps(payload), output)
    else:
        pairs = [(k, v) for k, v in rep.to_dict().items() if isinstance(v, (int, float)) and v is not None]
        _emit_pairs(pairs, fmt, output)


@main.command()
@_with_options(model_options)
@draws_option
@seed_option
@format_option
@output_option
@_handle_errors
def loo(model, input_path, m, mu0, mode, prediction_mode, mu, tau, counting, draws, seed, fmt, output):
    """Exact leave-one-out cross-validation by refitting."""
    model_obj, data = _build_model(model, input_path, m, mu0, mode, prediction_mode)
    full_fit = model_obj.fit(data, draws=draws, seed=derive_seed(seed, 0))
    rep = criterion_report(full_fit.pointwise_loglik())
    loo_rep = loo_report(model_obj, data, rep.lppd, draws=draws, seed=derive_seed(seed, 1))
    payload = {"draws": draws, "seed": seed, "model": model, "lppd": rep.lppd, "loo": loo_rep.to_dict()}
    if fmt == "json":
        _emit(_json_dumps(payload), output)
    else:
        pairs = [("lppd", rep.lppd)] + [
            (k, v) for k, v in loo_rep.to_dict().items() if isinstance(v, (int, float))
        ]
        _emit_pairs(pairs, fmt, output)


# ---------------------------------------------------------------------------
@main.command("schools-table")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None)
@draws_option
@seed_option
@waic_option
@format_option
@output_option
@_handle_errors
def schools_table(input_path, draws, seed, waic_variant, fmt, output):
    """Deviance table across no pooling / complete pooling / hierarchical."""
    data = load_schools_csv(input_path) if input_path else None
    table = schools_table_report(data, draws=draws, seed=seed, waic_variant=int(waic_variant))
    if fmt == "json":
        _emit(_json_dumps(table), output)
        return
    if fmt == "csv":
        lines = ["row," + ",".join(table["columns"])]
        for name, per_col in table["rows"].items():
            cells = [
                v if isinstance(v, str) else repr(float(v))
                for v in (per_col[c] for c in table["columns"])
            ]
            lines.append(name + "," + ",".join(f'"{c}"' if "," in c else c for c in cells))
        _emit("\n".join(lines), output)
        return
    cols = table["columns"]
    label_width = max(len(r) for r in table["rows"])
    cell_width = max(len(UNDEFINED_CELL_ABBREV), 18)
    header = " " * label_width + "  " + "  ".join(c.rjust(cell_width) for c in cols)
    lines = [header]
    for name, per_col in table["rows"].items():
        cells = []
        for c in cols:
            v = per_col[c]
            cells.append((UNDEFINED_CELL_ABBREV if isinstance(v, str) else f"{v:.2f}").rjust(cell_width))
        lines.append(name.ljust(label_width) + "  " + "  ".join(cells))
    lines.append("")
    seen = []
    for per_col in table["rows"].values():
        for v in per_col.values():
            if isinstance(v, str) and v not in seen:
                seen.append(v)
    for reason in seen:
        lines.append(f"[{UNDEFINED_CELL_ABBREV}] {reason}")
    _emit("\n".join(lines), output)


UNDEFINED_CELL_ABBREV = "undefined"


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--hist-out", type=click.Path(), default=None, help="write the lpd histogram CSV here")
@click.option("--dic-parameterization", type=click.Choice(["sigma", "sigma2", "log-sigma"]),
              default="log-sigma", show_default=True)
@draws_option
@seed_option
@waic_option
@format_option
@output_option
@_handle_errors
def election(input_path, hist_out, dic_parameterization, draws, seed, waic_variant, fmt, output):
    """Regression example: fit, criteria, exact LOO, lpd posterior summary."""
    data = load_election_csv(input_path) if input_path else None
    rep = election_report(
        data,
        draws=draws,
        seed=seed,
        waic_variant=int(waic_variant),
        dic_parameterization=dic_parameterization.replace("-", "_"),
    )
    if hist_out:
        write_histogram_csv(rep["lpd_posterior"]["bin_left"], rep["lpd_posterior"]["counts"], hist_out)
    if fmt == "json":
        _emit(_json_dumps(rep), output)
        return
    c = rep["criteria"]
    pairs_out = [
        ("mle_a", rep["mle"]["a"]),
        ("mle_b", rep["mle"]["b"]),
        ("mle_sigma", rep["mle"]["sigma"]),
        ("E_sigma", rep["posterior_means"]["sigma"]),
        ("E_sigma2", rep["posterior_means"]["sigma2"]),
        ("E_log_sigma", rep["posterior_means"]["log_sigma"]),
        ("lppd", c["lppd"]),
        ("elpd_aic", c["elpd_aic"]),
        ("aic", c["aic"]),
        ("p_dic", c["p_dic"]),
        ("dic", c["dic"]),
        ("p_waic1", c["p_waic1"]),
        ("p_waic2", c["p_waic2"]),
        ("waic", c["waic"]),
        ("lppd_loo", rep["loo"]["lppd_loo"]),
        ("p_loo", rep["loo"]["p_loo"]),
        ("p_cloo", rep["loo"]["p_cloo"]),
        ("lpd_mean", rep["lpd_posterior"]["mean"]),
        ("lpd_max", rep["lpd_posterior"]["max"]),
        ("lpd_gap", rep["lpd_posterior"]["gap"]),
    ]
    _emit_pairs(pairs_out, fmt, output)


# ---------------------------------------------------------------------------
@main.command("oracle")
@click.option("--n", type=int, required=True)
@click.option("--m", type=float, default=0.0, show_default=True)
@click.option("--ybar", type=float, default=0.0, show_default=True)
@click.option("--s2y", type=float, default=0.0, show_default=True)
@click.option("--mu0", type=float, default=0.0, show_default=True)
@click.option("--y", "y_csv", type=str, default=None,
              help="comma-separated data vector; enables the LOO formulas")
@format_option
@output_option
@_handle_errors
def oracle(n, m, ybar, s2y, mu0, y_csv, fmt, output):
    """Closed-form values for the unit-variance normal-mean family."""
    y = None
    if y_csv is not None:
        try:
            y = np.array([float(t) for t in y_csv.split(",") if t.strip()])
        except ValueError:
            raise MatrixFormatError("--y must be a comma-separated list of numbers") from None
        if y.size != n:
            raise ValueError(f"--y has {y.size} values but --n is {n}")
        ybar = float(y.mean())
        s2y = float(y.var(ddof=1)) if n > 1 else 0.0
    spec = NormalMeanSpec(n=n, ybar=ybar, s2y=s2y, m=m, mu0=mu0)
    table = oracle_mod.formula_table(spec, y=y)
    if fmt == "json":
        _emit(_json_dumps(table), output)
    else:
        _emit_pairs(list(table.items()), fmt, output)


# ---------------------------------------------------------------------------
@main.command()
@click.option("--n", type=int, default=None, help="data points per replicate")
@click.option("--m", type=float, default=0.0, show_default=True)
@click.option("--replicates", "-R", type=int, default=None,
              help="replicate datasets [default: 100000, or 10000 per point with --curve]")
@click.option("--estimator", "estimators", multiple=True,
              type=click.Choice(ESTIMATOR_NAMES), help="repeatable; default all")
@click.option("--theta-source", type=click.Choice(["auto", "fixed", "from-prior"]),
              default="auto", show_default=True)
@click.option("--theta0", type=float, default=0.0, show_default=True)
@click.option("--mu0", type=float, default=0.0, show_default=True)
@click.option("--curve", is_flag=True, help="sweep --n-values and emit a bias-curve CSV")
@click.option("--n-values", type=str, default=None, help="comma-separated n sweep for --curve")
@seed_option
@format_option
@output_option
@_handle_errors
def expect(n, m, replicates, estimators, theta_source, theta0, mu0, curve, n_values, seed, fmt, output):
    """Monte Carlo validation of estimator expectations."""
    if theta_source == "auto":
        source = "from_prior" if m > 0 else "fixed"
    else:
        source = theta_source.replace("-", "_")
    if replicates is None:
        replicates = 10_000 if curve else 100_000

    if curve:
        if not n_values:
            raise ValueError("--curve requires --n-values")
        if len(estimators) != 1:
            raise ValueError("--curve requires exactly one --estimator")
        ns = [int(t) for t in n_values.split(",") if t.strip()]
        rows = bias_curve(ns, m, estimators[0], replicates, seed)
        buf = io.StringIO()
        write_bias_curve_csv(rows, buf)
        _emit(buf.getvalue().rstrip("\n"), output)
        return

    if n is None:
        raise ValueError("--n is required unless --curve is given")
    if estimators:
        chosen = tuple(estimators)
    elif n >= 2:
        chosen = ESTIMATOR_NAMES
    else:
        chosen = tuple(e for e in ESTIMATOR_NAMES if e not in _LOO_NAMES)
    plan = ReplicationPlan(
        R=replicates,
        n=n,
        m=m,
        theta_source=source,
        theta0=theta0,
        mu0=mu0,
        seed=seed,
        estimators=chosen,
    )
    result = run_expectation_study(plan)
    if fmt == "json":
        _emit(result.to_json(), output)
    elif fmt == "csv":
        lines = ["estimator,mc_mean,mc_se,oracle,z"]
        for name, s in result.stats.items():
            lines.append(
                f"{name},{s.mc_mean!r},{s.mc_se!r},{s.oracle_value!r},{s.z_score!r}"
            )
        _emit("\n".join(lines), output)
    else:
        lines = [f"{'estimator':12s} {'mc_mean':>12s} {'mc_se':>10s} {'oracle':>12s} {'z':>8s}"]
        for name, s in result.stats.items():
            lines.append(
                f"{name:12s} {s.mc_mean:12.5f} {s.mc_se:10.5f} {s.oracle_value:12.5f} {s.z_score:8.2f}"
            )
        _emit("\n".join(lines), output)


if __name__ == "__main__":
    main()
