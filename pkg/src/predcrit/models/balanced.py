"""Balanced two-level normal data with known hyperparameters.

Observations y_ij ~ N(theta_j, 1) for i = 1..n within groups j = 1..J,
with theta_j ~ N(mu, tau^2) and (mu, tau) known. The interesting choice
here is the unit of prediction: count each observation as a data point
(n*J columns) or each group (J columns, each the group's summed log
density per draw). The two countings give different pointwise criteria
on the same posterior draws.
"""
from __future__ import annotations

import csv

import numpy as np

from ..draws import PointwiseLogLikMatrix
from ..errors import MatrixFormatError
from .normal import NormalMeanSpec, normal_posterior_draws
from ..seeds import derive_seed

__all__ = [
    "balanced_hierarchical_loglik",
    "balanced_group_posterior_draws",
    "load_balanced_csv",
    "COUNTINGS",
]

COUNTINGS = ("observation", "group")

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def balanced_group_posterior_draws(y: np.ndarray, mu: float, tau: float, draws: int, seed: int) -> np.ndarray:
    """S x J draws of the group means given known (mu, tau).

    With hyperparameters known the groups decouple into J independent
    conjugate normal-mean problems (prior precision 1/tau^2), each seeded
    from its own derived stream.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError("y must be an n x J array of observations")
    if tau <= 0:
        raise ValueError("tau must be positive")
    n, J = y.shape
    theta = np.empty((draws, J))
    for j in range(J):
        spec = NormalMeanSpec.from_data(y[:, j], m=1.0 / tau**2, mu0=mu)
        theta[:, j] = normal_posterior_draws(spec, draws, derive_seed(seed, j))
    return theta


def balanced_hierarchical_loglik(theta_draws: np.ndarray, y: np.ndarray, counting: str = "observation") -> PointwiseLogLikMatrix:
    """Pointwise log-density matrix under the chosen data-point counting.

    observation: n*J columns, entry log N(y_ij | theta_j^s, 1), ordered
    (i=0,j=0..J-1), (i=1,...), matching y.reshape(-1).
    group: J columns, column j the sum over i of that group's log
    densities for each draw.
    """
    if counting not in COUNTINGS:
        raise ValueError(f"counting must be one of {COUNTINGS}")
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta_draws, dtype=float)
    if y.ndim != 2 or theta.ndim != 2 or theta.shape[1] != y.shape[1]:
        raise ValueError("y must be n x J and theta_draws S x J")
    n, J = y.shape
    # S x n x J, then flatten or sum over i
    ll = -_HALF_LOG_2PI - 0.5 * (y[None, :, :] - theta[:, None, :]) ** 2
    if counting == "observation":
        return PointwiseLogLikMatrix(ll.reshape(theta.shape[0], n * J))
    return PointwiseLogLikMatrix(ll.sum(axis=1))


def load_balanced_csv(source) -> np.ndarray:
    """Read an n x J observation table with header `group_1,...,group_J`."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_balanced_csv(fh)
    rows = list(csv.reader(source))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise MatrixFormatError("empty balanced-data file")
    header = [c.strip() for c in rows[0]]
    expected = [f"group_{j + 1}" for j in range(len(header))]
    if header != expected:
        raise MatrixFormatError(
            f"balanced CSV header must be {','.join(expected)}, got {','.join(header)}"
        )
    if len(rows) < 2:
        raise MatrixFormatError("balanced CSV has a header but no observations")
    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise MatrixFormatError(f"row {r} has {len(row)} cells, expected {len(header)}")
        try:
            data[r - 1] = [float(c) for c in row]
        except ValueError:
            raise MatrixFormatError(f"row {r} has a non-numeric cell") from None
    return data
