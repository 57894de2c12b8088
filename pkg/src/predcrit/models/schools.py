"""Group-level normal meta-analysis with three pooling modes.

Data per group j: an estimated effect y_j with known standard error
sigma_j, modeled y_j ~ N(theta_j, sigma_j^2). The modes differ in what
ties the theta_j together:

no_pooling        theta_j independent, flat priors: theta_j | y ~ N(y_j, sigma_j^2)
complete_pooling  a single shared theta with flat prior (precision-weighted posterior)
hierarchical      theta_j ~ N(mu, tau^2), uniform hyperprior on (mu, tau)

The hierarchical posterior is sampled without MCMC: tau from its gridded
marginal (inverse CDF on a dense uniform grid), then mu | tau, y normal,
then each theta_j | mu, tau, y normal. A held-out group has no data in
the training fit, so its effect is drawn from the population N(mu, tau^2);
under no pooling that distribution does not exist and prediction is
refused.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..draws import PointwiseLogLikMatrix
from ..errors import MatrixFormatError, ModelRefusalError

__all__ = [
    "EightSchoolsData",
    "SchoolsModel",
    "schools_fit",
    "schools_mle",
    "load_schools_csv",
    "default_eight_schools",
    "POOLING_MODES",
    "PREDICTION_MODES",
]

POOLING_MODES = ("no_pooling", "complete_pooling", "hierarchical")
PREDICTION_MODES = ("existing_groups", "new_groups")

TAU_GRID_SIZE = 2000


@dataclass(frozen=True)
class EightSchoolsData:
    """Estimated group effects and their standard errors, plus model mode."""

    y: np.ndarray
    sigma: np.ndarray
    mode: str = "hierarchical"
    prediction_mode: str = "existing_groups"
    names: tuple = field(default=())

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=float).reshape(-1)
        if y.size != sigma.size or y.size < 1:
            raise ValueError("y and sigma must be nonempty and the same length")
        if (sigma <= 0).any():
            raise ValueError("all standard errors must be positive")
        if self.mode not in POOLING_MODES:
            raise ValueError(f"mode must be one of {POOLING_MODES}")
        if self.prediction_mode not in PREDICTION_MODES:
            raise ValueError(f"prediction_mode must be one of {PREDICTION_MODES}")
        if self.prediction_mode == "new_groups" and self.mode != "hierarchical":
            raise ValueError("new_groups prediction needs the hierarchical mode")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)
        if not self.names:
            object.__setattr__(self, "names", tuple(str(j + 1) for j in range(y.size)))

    @property
    def J(self) -> int:
        return self.y.size

    def __len__(self) -> int:
        return self.y.size

    def with_mode(self, mode: str, prediction_mode: str | None = None) -> "EightSchoolsData":
        return EightSchoolsData(
            self.y,
            self.sigma,
            mode=mode,
            prediction_mode=prediction_mode or self.prediction_mode,
            names=self.names,
        )


def load_schools_csv(source) -> EightSchoolsData:
    """Read `school,y,sigma` rows (header required)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_schools_csv(fh)
    rows = list(csv.reader(source))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["school", "y", "sigma"]:
        raise MatrixFormatError("schools CSV must start with header school,y,sigma")
    names, ys, sigmas = [], [], []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != 3:
            raise MatrixFormatError(f"row {r} has {len(row)} cells, expected 3")
        try:
            names.append(row[0].strip())
            ys.append(float(row[1]))
            sigmas.append(float(row[2]))
        except ValueError:
            raise MatrixFormatError(f"row {r} has a non-numeric cell") from None
    return EightSchoolsData(np.array(ys), np.array(sigmas), names=tuple(names))


def default_eight_schools(mode: str = "hierarchical") -> EightSchoolsData:
    """The bundled eight-schools coaching dataset."""
    ref = resources.files(__package__).joinpath("data/eight_schools.csv")
    with ref.open("r", encoding="utf-8") as fh:
        data = load_schools_csv(fh)
    return data.with_mode(mode)


def _tau_grid_posterior(y: np.ndarray, sigma: np.ndarray, grid: np.ndarray | None = None):
    """Gridded marginal p(tau | y) under the uniform (mu, tau) hyperprior.

    Returns (grid, normalized masses, mu_hat(tau), V_mu(tau)). The default
    grid is uniform on [0, 2 max_j(|y_j| + sigma_j)] with TAU_GRID_SIZE
    points; callers may pass their own (e.g. a single pinned value).
    """
    if grid is None:
        tau_max = 2.0 * float(np.max(np.abs(y) + sigma))
        grid = np.linspace(0.0, tau_max, TAU_GRID_SIZE)
    else:
        grid = np.asarray(grid, dtype=float).reshape(-1)
    var = sigma[None, :] ** 2 + grid[:, None] ** 2
    v_mu = 1.0 / (1.0 / var).sum(axis=1)
    mu_hat = v_mu * (y[None, :] / var).sum(axis=1)
    logp = (
        0.5 * np.log(v_mu)
        - 0.5 * np.log(var).sum(axis=1)
        - 0.5 * ((y[None, :] - mu_hat[:, None]) ** 2 / var).sum(axis=1)
    )
    logp -= logp.max()
    mass = np.exp(logp)
    mass /= mass.sum()
    return grid, mass, mu_hat, v_mu


class _SchoolsFit:
    """Cached posterior draws for every group, training or held out.

    theta has shape (S, J) over the *full* group list; a held-out group's
    column is populated from the population distribution (hierarchical)
    or is invalid (no pooling, where scoring it raises).
    """

    def __init__(
        self,
        data: EightSchoolsData,
        exclude: int | None,
        draws: int,
        seed: int,
        tau_grid: np.ndarray | None = None,
    ):
        self._data = data
        self._exclude = exclude
        y, sigma, J = data.y, data.sigma, data.J
        keep = np.arange(J) if exclude is None else np.delete(np.arange(J), exclude)
        if keep.size == 0:
            raise ValueError("training set must contain at least one group")
        rng = np.random.default_rng(seed)
        self.tau = None
        self.mu = None
        self.tau_grid = None
        self.tau_mass = None

        if data.mode == "no_pooling":
            theta = np.full((draws, J), np.nan)
            theta[:, keep] = y[keep] + sigma[keep] * rng.standard_normal((draws, keep.size))
            self._valid = np.zeros(J, dtype=bool)
            self._valid[keep] = True
        elif data.mode == "complete_pooling":
            w = 1.0 / sigma[keep] ** 2
            v_post = 1.0 / w.sum()
            mean_post = v_post * (w * y[keep]).sum()
            shared = mean_post + np.sqrt(v_post) * rng.standard_normal(draws)
            theta = np.repeat(shared[:, None], J, axis=1)
            self.mu = shared
            self._valid = np.ones(J, dtype=bool)
        else:
            grid, mass, mu_hat, v_mu = _tau_grid_posterior(y[keep], sigma[keep], tau_grid)
            self.tau_grid, self.tau_mass = grid, mass
            cdf = np.cumsum(mass)
            idx = np.searchsorted(cdf, rng.random(draws))
            tau = grid[idx]
            mu = mu_hat[idx] + np.sqrt(v_mu[idx]) * rng.standard_normal(draws)
            t2 = tau[:, None] ** 2
            s2 = sigma[None, :] ** 2
            # conditional mean/var written so tau = 0 needs no special case
            cond_mean = (y[None, :] * t2 + mu[:, None] * s2) / (t2 + s2)
            cond_var = s2 * t2 / (t2 + s2)
            theta = cond_mean + np.sqrt(cond_var) * rng.standard_normal((draws, J))
            if exclude is not None:
                theta[:, exclude] = mu + tau * rng.standard_normal(draws)
            if data.prediction_mode == "new_groups":
                theta = mu[:, None] + tau[:, None] * rng.standard_normal((draws, J))
            self.tau = tau
            self.mu = mu
            self._valid = np.ones(J, dtype=bool)
        self.theta = theta

    @property
    def theta_bayes(self) -> np.ndarray:
        return self.theta.mean(axis=0)

    def lpd_at_posterior_mean(self) -> float:
        """Total log density at the posterior mean of the group effects."""
        if not self._valid.all():
            raise ModelRefusalError("model cannot predict held-out point")
        d = self._data
        r = d.y - self.theta_bayes
        return float((-0.5 * np.log(2 * np.pi * d.sigma**2) - r**2 / (2 * d.sigma**2)).sum())

    def pointwise_loglik(self, indices=None) -> PointwiseLogLikMatrix:
        d = self._data
        idx = np.arange(d.J) if indices is None else np.asarray(indices, dtype=int)
        if not self._valid[idx].all():
            raise ModelRefusalError(
                "model cannot predict held-out point: the no-pooling fit has "
                "no distribution for an unobserved group"
            )
        y, sigma = d.y[idx], d.sigma[idx]
        th = self.theta[:, idx]
        ll = -0.5 * np.log(2 * np.pi * sigma[None, :] ** 2) - (y[None, :] - th) ** 2 / (
            2 * sigma[None, :] ** 2
        )
        return PointwiseLogLikMatrix(ll)


def schools_mle(data: EightSchoolsData) -> tuple[float, int]:
    """(total log density at the MLE, parameter count k).

    Only the two flat-prior modes have a maximum likelihood estimate; the
    hierarchical model has none, so it raises.
    """
    y, sigma = data.y, data.sigma
    base = float((-0.5 * np.log(2 * np.pi * sigma**2)).sum())
    if data.mode == "no_pooling":
        return base, data.J
    if data.mode == "complete_pooling":
        w = 1.0 / sigma**2
        mu_hat = float((w * y).sum() / w.sum())
        return base - 0.5 * float(((y - mu_hat) ** 2 * w).sum()), 1
    raise ValueError("the hierarchical model has no maximum likelihood estimate")


class SchoolsModel:
    def fit(self, data: EightSchoolsData, exclude: int | None = None, *, draws: int, seed: int) -> _SchoolsFit:
        return _SchoolsFit(data, exclude, draws, seed)


def schools_fit(
    data: EightSchoolsData, draws: int, seed: int, tau_grid: np.ndarray | None = None
) -> _SchoolsFit:
    """Fit the requested pooling mode to the full dataset.

    `tau_grid` overrides the hierarchical mode's default grid (used, for
    instance, to pin tau at a single value).
    """
    return _SchoolsFit(data, None, draws, seed, tau_grid=tau_grid)
