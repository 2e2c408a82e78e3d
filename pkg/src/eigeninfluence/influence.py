"""Influence functions for the classical covariance, classical correlation,
and PHD (principal Hessian directions) average-Hessian estimators, at the
population level and as plug-in empirical versions.

An influence function is the first-order sensitivity of a matrix-valued
estimator to a point mass placed at a contaminant; all three here return
exactly symmetric matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset
from .spectral import symmetrize

__all__ = [
    "ESTIMATORS",
    "Contaminant",
    "PopulationModel",
    "CorrelationModel",
    "PhdModel",
    "if_covariance",
    "if_correlation",
    "if_phd",
    "eif",
    "sample_mean_cov",
    "empirical_correlation_model",
    "empirical_phd_model",
]

ESTIMATORS = ("cov", "corr", "phd")


@dataclass(frozen=True)
class Contaminant:
    """A contamination point: a predictor vector and, for regression
    estimators, its response."""

    x: np.ndarray
    y: Optional[float] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if not np.isfinite(x).all():
            raise ValueError("contaminant has non-finite entries")
        object.__setattr__(self, "x", x)
        if self.y is not None:
            y = float(self.y)
            if not np.isfinite(y):
                raise ValueError("contaminant response is non-finite")
            object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class PopulationModel:
    """Mean vector and positive-definite covariance matrix."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        sigma = symmetrize(self.sigma)
        if sigma.shape[0] != mu.shape[0]:
            raise ValueError(f"mu has length {mu.shape[0]} but sigma is {sigma.shape}")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValueError("sigma must be positive definite") from None
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def p(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class CorrelationModel:
    """Correlation matrix (unit diagonal, PSD) plus the marginal means and
    variances needed to standardize a contaminant."""

    gamma: np.ndarray
    mu: np.ndarray
    sigma_diag: np.ndarray

    def __post_init__(self):
        gamma = symmetrize(self.gamma)
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        sig = np.asarray(self.sigma_diag, dtype=float).reshape(-1)
        p = gamma.shape[0]
        if mu.shape[0] != p or sig.shape[0] != p:
            raise ValueError("gamma, mu, sigma_diag dimensions disagree")
        if np.any(sig <= 0):
            raise ValueError("sigma_diag entries must be positive")
        if np.max(np.abs(np.diag(gamma) - 1.0)) > 1e-8:
            raise ValueError("gamma must have unit diagonal")
        if np.max(np.abs(gamma)) > 1.0 + 1e-8:
            raise ValueError("correlation entries must lie in [-1, 1]")
        gamma = np.clip(gamma, -1.0, 1.0)
        np.fill_diagonal(gamma, 1.0)
        if np.min(np.linalg.eigvalsh(gamma)) < -1e-8 * p:
            raise ValueError("gamma must be positive semidefinite")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma_diag", sig)

    @property
    def p(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class PhdModel:
    """Average-Hessian matrix for PHD together with the moments its influence
    function needs: the predictor model, the OLS slope vector, and E(Y)."""

    hbar: np.ndarray
    pop: PopulationModel
    b_ols: np.ndarray
    ey: float

    def __post_init__(self):
        hbar = symmetrize(self.hbar)
        b = np.asarray(self.b_ols, dtype=float).reshape(-1)
        if hbar.shape[0] != self.pop.p or b.shape[0] != self.pop.p:
            raise ValueError("hbar/b_ols dimensions disagree with the predictor model")
        object.__setattr__(self, "hbar", hbar)
        object.__setattr__(self, "b_ols", b)
        object.__setattr__(self, "ey", float(self.ey))

    @property
    def p(self) -> int:
        return self.pop.p


def if_covariance(model: PopulationModel, c: Contaminant) -> np.ndarray:
    """(x - mu)(x - mu)^T - sigma."""
    if c.x.shape[0] != model.p:
        raise ValueError(f"contaminant has length {c.x.shape[0]}, model expects {model.p}")
    d = c.x - model.mu
    return np.outer(d, d) - model.sigma


def if_correlation(model: CorrelationModel, c: Contaminant) -> np.ndarray:
    """z z^T - (D gamma + gamma D)/2 for the standardized contaminant
    z_i = (x_i - mu_i)/sqrt(sigma_ii) and D = diag(z_i^2).

    The diagonal vanishes identically because gamma has unit diagonal.
    """
    if c.x.shape[0] != model.p:
        raise ValueError(f"contaminant has length {c.x.shape[0]}, model expects {model.p}")
    z = (c.x - model.mu) / np.sqrt(model.sigma_diag)
    d = z * z
    out = np.outer(z, z) - 0.5 * (d[:, None] * model.gamma + model.gamma * d[None, :])
    np.fill_diagonal(out, 0.0)  # unit diagonal of gamma forces this analytically
    return out


def if_phd(model: PhdModel, c: Contaminant) -> np.ndarray:
    """Influence function of the PHD average-Hessian estimator at (y, x).

    With w = sigma^{-1}(x - mu) and u = hbar sigma w + b_ols:

        (y - E(Y)) (w w^T - sigma^{-1}) - w u^T - u w^T - hbar

    symmetrized to absorb rounding in sigma^{-1}.
    """
    if c.y is None:
        raise ValueError("PHD influence requires a contaminant response y")
    if c.x.shape[0] != model.p:
        raise ValueError(f"contaminant has length {c.x.shape[0]}, model expects {model.p}")
    sigma = model.pop.sigma
    w = np.linalg.solve(sigma, c.x - model.pop.mu)
    siginv = np.linalg.inv(sigma)
    u = model.hbar @ (sigma @ w) + model.b_ols
    out = (
        (c.y - model.ey) * (np.outer(w, w) - siginv)
        - np.outer(w, u)
        - np.outer(u, w)
        - model.hbar
    )
    return (out + out.T) / 2.0


def sample_mean_cov(x: np.ndarray, ddof: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance with divisor n - ddof (default 1/n, which
    makes the empirical covariance influence values average to zero)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n - ddof < 1:
        raise ValueError(f"need more than {ddof} observations")
    xbar = x.mean(axis=0)
    xc = x - xbar
    return xbar, (xc.T @ xc) / (n - ddof)


def empirical_correlation_model(data: Dataset, ddof: int = 0) -> CorrelationModel:
    """Plug-in correlation model at the empirical distribution."""
    xbar, s = sample_mean_cov(data.x, ddof)
    var = np.diag(s).copy()
    if np.any(var <= 0):
        bad = int(np.argmax(var <= 0))
        raise ValueError(f"column {bad} has zero variance; correlation undefined")
    scale = np.sqrt(var)
    gamma = s / np.outer(scale, scale)
    np.fill_diagonal(gamma, 1.0)
    return CorrelationModel(gamma=gamma, mu=xbar, sigma_diag=var)


def empirical_phd_model(data: Dataset, ddof: int = 0) -> PhdModel:
    """Plug-in PHD model at the empirical distribution.

    The sample covariance must be invertible, so this refuses p >= n rather
    than falling back to a pseudo-inverse.
    """
    if data.y is None:
        raise ValueError("PHD requires a response column")
    n, p = data.n, data.p
    if p >= n:
        raise ValueError(f"PHD needs an invertible sample covariance; got p={p} >= n={n}")
    xbar, s = sample_mean_cov(data.x, ddof)
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise ValueError("sample covariance is singular; PHD undefined") from None
    ybar = float(data.y.mean())
    xc = data.x - xbar
    yc = data.y - ybar
    m = n - ddof
    weighted = (xc * yc[:, None]).T @ xc / m  # sum (y_i - ybar) xc_i xc_i^T / m
    hbar = np.linalg.solve(s, np.linalg.solve(s, weighted).T)
    b = np.linalg.solve(s, xc.T @ yc / m)
    pop = PopulationModel(mu=xbar, sigma=s)
    return PhdModel(hbar=hbar, pop=pop, b_ols=b, ey=ybar)


def eif(estimator: str, data: Dataset, i: int, ddof: int = 0) -> np.ndarray:
    """Empirical influence function: the population influence function with
    every parameter replaced by its plug-in estimate, evaluated at
    observation i."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    if not 0 <= i < data.n:
        raise ValueError(f"observation index {i} out of range for n={data.n}")
    if data.n < 2:
        raise ValueError("need at least 2 observations")
    if estimator == "cov":
        # direct formula: works even when the sample covariance is singular (p > n)
        xbar, s = sample_mean_cov(data.x, ddof)
        d = data.x[i] - xbar
        return np.outer(d, d) - s
    if estimator == "corr":
        model = empirical_correlation_model(data, ddof)
        return if_correlation(model, Contaminant(x=data.x[i]))
    model = empirical_phd_model(data, ddof)
    return if_phd(model, Contaminant(x=data.x[i], y=float(data.y[i])))
