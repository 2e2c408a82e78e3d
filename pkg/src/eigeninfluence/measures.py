"""Influence of a contamination point on the span of selected eigenvectors.

The central quantity is the second-order sensitivity of the selected span
under point-mass contamination: the limit of (1/eps^2)[1 - trace(P P(eps))/K]
as the contamination weight eps goes to zero, which equals

    (1/K) sum_{j in S} sum_{r not in S} (v_j^T IF v_r)^2 / (k_j - k_r)^2

for the estimator's influence function IF and eigenpairs (k, v). The generic
form takes an influence matrix directly; the covariance, correlation, and PHD
estimators also have closed forms that avoid building the matrix. A finite-eps
probe evaluates the pre-limit quantity exactly for the covariance estimator
and serves as an independent convergence oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .influence import Contaminant, CorrelationModel, PhdModel, PopulationModel
from .spectral import (
    EigenSystem,
    Ordering,
    SubspaceSelection,
    check_separation,
    default_gap_tol,
    eigendecompose,
    require_separation,
    trace_product,
)

__all__ = [
    "InfluenceValue",
    "ILL_CONDITIONED_GAP_FACTOR",
    "subspace_influence",
    "cov_subspace_influence",
    "corr_subspace_influence",
    "phd_subspace_influence",
    "component_influence",
    "two_block_closed_form",
    "mahalanobis",
    "finite_epsilon_influence",
]

# below this relative gap the squared-gap denominators are numerically fragile
ILL_CONDITIONED_GAP_FACTOR = 1e-6


@dataclass(frozen=True)
class InfluenceValue:
    """A nonnegative influence value for a K-dimensional eigenvector span.

    `ill_conditioned` marks results whose smallest cross-boundary eigenvalue
    gap was below ILL_CONDITIONED_GAP_FACTOR times the spectral radius; such
    values are finite but dominated by a nearly-vanishing denominator.
    """

    value: float
    k: int
    estimator: str
    ill_conditioned: bool = False

    def __float__(self) -> float:
        return self.value


def _ill_conditioned(es: EigenSystem, sel: SubspaceSelection) -> bool:
    comp = sel.complement
    if not comp:
        return False
    gaps = np.abs(es.values[list(sel.indices)][:, None] - es.values[list(comp)][None, :])
    return float(gaps.min()) < ILL_CONDITIONED_GAP_FACTOR * float(np.max(np.abs(es.values)))


def _ratio_sq_sum(num: np.ndarray, sel_vals: np.ndarray, comp_vals: np.ndarray) -> float:
    den = sel_vals[:, None] - comp_vals[None, :]
    ratio = num / den
    return float(np.sum(ratio * ratio))


def subspace_influence(
    es: EigenSystem,
    sel: SubspaceSelection,
    ifm: np.ndarray,
    estimator: str = "generic",
    gap_tol: Optional[float] = None,
) -> InfluenceValue:
    """Span influence from an explicit influence matrix.

    (1/K) sum over selected j and complementary r of
    (v_j^T ifm v_r)^2 / (k_j - k_r)^2. Requires the selection boundary to be
    spectrally separated (no shared eigenvalue across it).
    """
    require_separation(es, sel, gap_tol)
    comp = sel.complement
    if not comp:
        return InfluenceValue(0.0, sel.k, estimator)
    ifm = np.asarray(ifm, dtype=float)
    num = es.frame(sel).T @ ifm @ es.complement_frame(sel)
    value = _ratio_sq_sum(num, es.values[list(sel.indices)], es.values[list(comp)]) / sel.k
    return InfluenceValue(value, sel.k, estimator, _ill_conditioned(es, sel))


def cov_subspace_influence(
    model: PopulationModel,
    es: EigenSystem,
    sel: SubspaceSelection,
    c: Contaminant,
    gap_tol: Optional[float] = None,
) -> InfluenceValue:
    """Closed form for the covariance estimator.

    With scores y_m = v_m^T (x - mu):
    (1/K) sum_{j,r} y_j^2 y_r^2 / (k_j - k_r)^2.
    `es` must be the eigensystem of model.sigma.
    """
    require_separation(es, sel, gap_tol)
    comp = sel.complement
    if not comp:
        return InfluenceValue(0.0, sel.k, "cov")
    y = es.vectors.T @ (c.x - model.mu)
    num = np.outer(y[list(sel.indices)], y[list(comp)])
    value = _ratio_sq_sum(num, es.values[list(sel.indices)], es.values[list(comp)]) / sel.k
    return InfluenceValue(value, sel.k, "cov", _ill_conditioned(es, sel))


def corr_subspace_influence(
    model: CorrelationModel,
    es: EigenSystem,
    sel: SubspaceSelection,
    c: Contaminant,
    gap_tol: Optional[float] = None,
) -> InfluenceValue:
    """Closed form for the correlation estimator.

    With z the standardized contaminant, D = diag(z^2), scores u_m = v_m^T z
    and eigenpairs (a, v) of the correlation matrix, each cross term is
    u_j u_r - (a_j + a_r)/2 * v_j^T D v_r, squared and divided by the squared
    eigenvalue gap. `es` must be the eigensystem of model.gamma.
    """
    require_separation(es, sel, gap_tol)
    comp = sel.complement
    if not comp:
        return InfluenceValue(0.0, sel.k, "corr")
    s_idx, c_idx = list(sel.indices), list(comp)
    z = (c.x - model.mu) / np.sqrt(model.sigma_diag)
    d = z * z
    u = es.vectors.T @ z
    vals = es.values
    cross_d = (es.vectors[:, s_idx] * d[:, None]).T @ es.vectors[:, c_idx]
    num = np.outer(u[s_idx], u[c_idx]) - 0.5 * (vals[s_idx][:, None] + vals[c_idx][None, :]) * cross_d
    value = _ratio_sq_sum(num, vals[s_idx], vals[c_idx]) / sel.k
    return InfluenceValue(value, sel.k, "corr", _ill_conditioned(es, sel))


def phd_subspace_influence(
    model: PhdModel,
    es: EigenSystem,
    sel: SubspaceSelection,
    c: Contaminant,
    gap_tol: Optional[float] = None,
) -> InfluenceValue:
    """Closed form for the PHD average-Hessian estimator.

    Valid when the selection covers exactly the nonzero eigenvalues of hbar
    (the estimator's rank equals K), so every complementary eigenvector is in
    its null space. `es` must be the eigensystem of model.hbar in
    absolute-descending order.
    """
    if c.y is None:
        raise ValueError("PHD influence requires a contaminant response y")
    require_separation(es, sel, gap_tol)
    comp = sel.complement
    if not comp:
        return InfluenceValue(0.0, sel.k, "phd")
    s_idx, c_idx = list(sel.indices), list(comp)
    vals = es.values
    scale = float(np.max(np.abs(vals)))
    zero_tol = 1e-8 * scale
    if np.any(np.abs(vals[s_idx]) <= zero_tol) or np.any(np.abs(vals[c_idx]) > zero_tol):
        raise ValueError(
            "selection must cover exactly the nonzero eigenvalues of the "
            "average-Hessian matrix (rank-K requirement)"
        )
    sigma = model.pop.sigma
    w = np.linalg.solve(sigma, c.x - model.pop.mu)
    wm = es.vectors.T @ w
    siginv_cross = es.vectors[:, s_idx].T @ np.linalg.solve(sigma, es.vectors[:, c_idx])
    lead = vals[s_idx] * (es.vectors[:, s_idx].T @ (sigma @ w)) + es.vectors[:, s_idx].T @ model.b_ols
    bracket = (c.y - model.ey) * (np.outer(wm[s_idx], wm[c_idx]) - siginv_cross) - np.outer(
        lead, wm[c_idx]
    )
    value = float(np.sum((bracket / vals[s_idx][:, None]) ** 2)) / sel.k
    return InfluenceValue(value, sel.k, "phd", _ill_conditioned(es, sel))


def component_influence(
    es: EigenSystem, j: int, ifm: np.ndarray, gap_tol: Optional[float] = None
) -> InfluenceValue:
    """Influence on a single eigenvector: the K=1 case, which equals the
    squared norm of that eigenvector's classical influence function."""
    return subspace_influence(es, SubspaceSelection((j,), es.dim), ifm, "generic", gap_tol)


def two_block_closed_form(
    lambda_top: float, lambda_rest: float, k: int, md: float, cos_sq: float
) -> InfluenceValue:
    """Covariance span influence when the spectrum has exactly two levels.

    For a diagonal covariance whose first k eigenvalues all equal
    `lambda_top` and whose remaining eigenvalues all equal `lambda_rest`
    (strictly smaller), the influence of a contaminant reduces to

        lambda_top * lambda_rest * md^4 / (k (lambda_top - lambda_rest)^2)
            * cos_sq * (1 - cos_sq)

    where md is its Mahalanobis distance and cos_sq the squared cosine of the
    angle between the whitened contaminant and the selected span.
    """
    if lambda_top == lambda_rest:
        raise ValueError("the two eigenvalue levels must differ")
    if not lambda_rest < lambda_top:
        raise ValueError("lambda_rest must be smaller than lambda_top")
    if md < 0:
        raise ValueError("md must be nonnegative")
    if not 0.0 <= cos_sq <= 1.0:
        raise ValueError("cos_sq must lie in [0, 1]")
    if k < 1:
        raise ValueError("k must be at least 1")
    value = (
        lambda_top * lambda_rest * md**4 / (k * (lambda_top - lambda_rest) ** 2)
    ) * cos_sq * (1.0 - cos_sq)
    return InfluenceValue(value, k, "cov")


def mahalanobis(model: PopulationModel, x) -> float:
    """sqrt((x - mu)^T sigma^{-1} (x - mu)) via a Cholesky triangular solve."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.p:
        raise ValueError(f"x has length {x.shape[0]}, model expects {model.p}")
    chol = np.linalg.cholesky(model.sigma)
    v = solve_triangular(chol, x - model.mu, lower=True)
    return float(np.linalg.norm(v))


def finite_epsilon_influence(
    model: PopulationModel,
    sel: SubspaceSelection,
    c: Contaminant,
    epsilon: float,
    gap_tol: Optional[float] = None,
) -> float:
    """Span influence at a finite contamination weight, covariance estimator.

    The contaminated covariance has the exact closed form
    (1 - eps) sigma + eps (1 - eps) (x - mu)(x - mu)^T, so this probe needs no
    series expansion: it eigendecomposes the clean and contaminated matrices
    and returns (1/eps^2)[1 - trace(P P(eps))/K]. As eps decreases the result
    converges to the closed-form influence with O(eps) error, which makes it
    an independent oracle for every covariance influence formula here.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    d = c.x - model.mu
    perturbed = (1.0 - epsilon) * model.sigma + epsilon * (1.0 - epsilon) * np.outer(d, d)
    base = eigendecompose(model.sigma, Ordering.ABSOLUTE_DESCENDING)
    bumped = eigendecompose(perturbed, Ordering.ABSOLUTE_DESCENDING)
    require_separation(base, sel, gap_tol, context="clean covariance")
    require_separation(bumped, sel, gap_tol, context=f"contaminated covariance (eps={epsilon:g})")
    tp = trace_product(base.frame(sel), bumped.frame(sel))
    return (1.0 - tp / sel.k) / epsilon**2
