"""Flat-prior simple linear regression: y_i ~ N(a + b x_i, sigma^2).

With prior p(a, b, log sigma) proportional to 1 the posterior factors as
sigma^2 | y  ~  scaled-inverse-chi^2(n - 2, s^2)   (s^2 = RSS / (n - 2))
(a, b) | sigma^2, y  ~  Normal(OLS estimate, sigma^2 (X'X)^-1)

so exact joint draws need no MCMC. The DIC point estimate is not
parameterization invariant in sigma; the fit exposes the three usual
choices and callers must pick one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..draws import PointwiseLogLikMatrix

__all__ = ["RegressionData", "RegressionModel", "regression_fit", "DIC_PARAMETERIZATIONS"]

DIC_PARAMETERIZATIONS = ("sigma", "sigma2", "log_sigma")


@dataclass(frozen=True)
class RegressionData:
    """Predictor/response pairs for the flat-prior regression."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.size != y.size:
            raise ValueError("x and y must have the same length")
        # proper sigma^2 posterior needs n - k >= 1 with k = 3; keep a margin
        if x.size < 4:
            raise ValueError("regression needs at least 4 data points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.size


def _design(x: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(x.size), x])


class _RegressionFit:
    """Joint posterior draws plus the point summaries used downstream."""

    def __init__(self, data: RegressionData, train_idx: np.ndarray, draws: int, seed: int):
        self._data = data
        x = data.x[train_idx]
        y = data.y[train_idx]
        X = _design(x)
        xtx = X.T @ X
        if np.linalg.matrix_rank(xtx) < 2:
            raise ValueError("singular design: predictor values must not be collinear")
        xtx_inv = np.linalg.inv(xtx)
        beta_hat = xtx_inv @ (X.T @ y)
        resid = y - X @ beta_hat
        rss = float(resid @ resid)
        n_train = x.size
        nu = n_train - 2
        if nu < 2:
            raise ValueError("too few training points for a proper sigma^2 posterior")
        s2 = rss / nu

        rng = np.random.default_rng(seed)
        sigma2 = nu * s2 / rng.chisquare(nu, draws)
        chol = np.linalg.cholesky(xtx_inv)
        z = rng.standard_normal((draws, 2))
        betas = beta_hat + (z @ chol.T) * np.sqrt(sigma2)[:, None]

        self.a = betas[:, 0]
        self.b = betas[:, 1]
        self.sigma2 = sigma2
        self.sigma = np.sqrt(sigma2)
        self.mle = (float(beta_hat[0]), float(beta_hat[1]), float(np.sqrt(rss / n_train)))
        self.rss = rss
        self.nu = nu

    # ---- point summaries -------------------------------------------------
    @property
    def posterior_means(self) -> dict:
        return {
            "a": float(self.a.mean()),
            "b": float(self.b.mean()),
            "sigma": float(self.sigma.mean()),
            "sigma2": float(self.sigma2.mean()),
            "log_sigma": float(np.log(self.sigma).mean()),
        }

    def mle_loglik(self) -> float:
        """Total log density of the dataset at the training MLE."""
        a, b, s = self.mle
        return self._total_loglik_at(a, b, s)

    def lpd_at_posterior_mean(self, parameterization: str = "log_sigma") -> float:
        """Total log density at the posterior mean of (a, b, <scale>).

        The scale point estimate depends on which transform is averaged;
        built-in reports use log_sigma.
        """
        if parameterization not in DIC_PARAMETERIZATIONS:
            raise ValueError(
                f"parameterization must be one of {DIC_PARAMETERIZATIONS}"
            )
        pm = self.posterior_means
        if parameterization == "sigma":
            s = pm["sigma"]
        elif parameterization == "sigma2":
            s = float(np.sqrt(pm["sigma2"]))
        else:
            s = float(np.exp(pm["log_sigma"]))
        return self._total_loglik_at(pm["a"], pm["b"], s)

    def _total_loglik_at(self, a: float, b: float, s: float) -> float:
        r = self._data.y - (a + b * self._data.x)
        return float(
            (-0.5 * np.log(2 * np.pi * s**2) - r**2 / (2 * s**2)).sum()
        )

    # ---- draw-level evaluation -------------------------------------------
    def pointwise_loglik(self, indices=None) -> PointwiseLogLikMatrix:
        if indices is None:
            x, y = self._data.x, self._data.y
        else:
            idx = np.asarray(indices, dtype=int)
            x, y = self._data.x[idx], self._data.y[idx]
        mu = self.a[:, None] + self.b[:, None] * x[None, :]
        ll = -0.5 * np.log(2 * np.pi * self.sigma2)[:, None] - (y[None, :] - mu) ** 2 / (
            2 * self.sigma2[:, None]
        )
        return PointwiseLogLikMatrix(ll)


class RegressionModel:
    def fit(self, data: RegressionData, exclude: int | None = None, *, draws: int, seed: int) -> _RegressionFit:
        n = len(data)
        idx = np.arange(n)
        if exclude is not None:
            idx = np.delete(idx, exclude)
        return _RegressionFit(data, idx, draws, seed)


def regression_fit(data: RegressionData, draws: int, seed: int) -> _RegressionFit:
    """Fit the flat-prior regression to the full dataset."""
    return RegressionModel().fit(data, draws=draws, seed=seed)
