"""Sample-level influence detection: exact leave-one-out recomputation, the
one-decomposition approximation, and a dual-space shortcut for the covariance
estimator when p greatly exceeds n.

The exact method refits the estimator once per deleted observation and scores
the span shift of the selected eigenvectors, scaled by (n-1)^2 to match the
leave-one-out contamination weight -1/(n-1). The approximation evaluates the
closed-form span influence with plug-in estimates after a single fit. For
covariance PCA with p >> n the scores of every observation vanish beyond the
rank bound n-1, so the approximation collapses to a short sum computable
entirely from the n x n Gram matrix of centered rows; the shortcut implements
that collapse and agrees with the full approximation exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .influence import (
    ESTIMATORS,
    Contaminant,
    empirical_correlation_model,
    empirical_phd_model,
    if_correlation,
    if_phd,
    sample_mean_cov,
)
from .spectral import (
    SubspaceGapError,
    SubspaceSelection,
    eigendecompose,
    require_separation,
    require_value_separation,
    trace_product,
)

__all__ = [
    "exact_loo",
    "approx_influence",
    "shortcut_influence",
    "iteration_counts",
    "spearman",
]


def _check_estimator(estimator: str) -> None:
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")


def _fit_matrix(x: np.ndarray, y: Optional[np.ndarray], estimator: str, ddof: int) -> np.ndarray:
    """The p x p estimator matrix at the empirical distribution of (x, y)."""
    if estimator == "cov":
        return sample_mean_cov(x, ddof)[1]
    if estimator == "corr":
        return empirical_correlation_model(Dataset(x=x), ddof).gamma
    return empirical_phd_model(Dataset(x=x, y=y), ddof).hbar


def _dual_cov_values(x: np.ndarray, ddof: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Covariance spectrum and Gram eigenvectors without forming p x p.

    Returns (full_values, gram_vectors, centered_rows, divisor): the length-p
    covariance spectrum in descending order (nonzero part shared with the
    n x n Gram matrix of centered rows, zero-padded past min(n, p)), the
    matching Gram eigenvectors, the centered data, and the divisor n - ddof.
    """
    n, p = x.shape
    m = n - ddof
    xc = x - x.mean(axis=0)
    gram = xc @ xc.T / m
    vals, u = np.linalg.eigh(gram)
    order = np.argsort(-vals)  # PSD spectrum: plain and absolute order agree
    vals = np.clip(vals[order], 0.0, None)
    u = u[:, order]
    keep = min(n, p)
    full = np.concatenate([vals[:keep], np.zeros(p - keep)]) if p > keep else vals[:p]
    return full, u, xc, m


def _dual_frame(
    xc: np.ndarray, u: np.ndarray, vals: np.ndarray, m: int, positions: Sequence[int]
) -> np.ndarray:
    """Covariance eigenvectors at the given positions, lifted from Gram space."""
    idx = list(positions)
    return xc.T @ u[:, idx] / np.sqrt(m * vals[idx])


def exact_loo(
    data: Dataset,
    estimator: str,
    sel: SubspaceSelection,
    *,
    ddof: int = 0,
    gap_tol: Optional[float] = None,
    subset: Optional[Sequence[int]] = None,
    threads: int = 1,
    dual: Optional[bool] = None,
) -> np.ndarray:
    """Exact leave-one-out span influence of every observation.

    For each i, refits the estimator without observation i and returns
    (n-1)^2 [1 - trace(P P_(i))/K] for the projectors P, P_(i) onto the
    selected eigenvector spans of the full and deleted fits. `subset`
    restricts the recomputation to chosen observations (others are NaN).
    `dual` forces or forbids the Gram-space covariance path; by default it is
    used when p > 2n and the selection stays within the rank bound. Deletion
    fits are independent, so `threads` > 1 evaluates them concurrently.
    """
    _check_estimator(estimator)
    n, p = data.n, data.p
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 observations")
    if sel.dim != p:
        raise ValueError(f"selection dim {sel.dim} != data dimension {p}")
    if estimator == "phd" and data.y is None:
        raise ValueError("PHD requires a response column")

    if subset is None:
        todo = list(range(n))
    else:
        todo = sorted({int(i) for i in subset})
        if todo and (todo[0] < 0 or todo[-1] >= n):
            raise ValueError(f"subset indices out of range for n={n}")

    out = np.full(n, np.nan)
    if sel.k == sel.dim:
        # both projectors are the identity regardless of the data
        out[todo] = 0.0
        return out

    if dual is None:
        # deletion fits have n-1 rows, so their covariance rank is at most n-2
        dual = estimator == "cov" and p > 2 * n and max(sel.indices) <= n - 3
    elif dual and estimator != "cov":
        raise ValueError("the dual Gram path applies to the covariance estimator only")

    def fit_frame(x: np.ndarray, y: Optional[np.ndarray], label: str) -> np.ndarray:
        if dual:
            vals, u, xc, m = _dual_cov_values(x, ddof)
            require_value_separation(vals, sel, gap_tol, context=label)
            return _dual_frame(xc, u, vals, m, sel.indices)
        try:
            mat = _fit_matrix(x, y, estimator, ddof)
        except ValueError as e:
            raise ValueError(f"{label}: {e}") from e
        es = eigendecompose(mat)
        require_separation(es, sel, gap_tol, context=label)
        return es.frame(sel)

    base = fit_frame(data.x, data.y, "full-sample fit")
    scale = (n - 1) ** 2

    def one(i: int) -> float:
        xi = np.delete(data.x, i, axis=0)
        yi = np.delete(data.y, i) if data.y is not None else None
        frame_i = fit_frame(xi, yi, f"leave-one-out fit {i}")
        # trace(P P_(i)) <= K analytically; clamp the rounding spill
        return max(0.0, scale * (1.0 - trace_product(base, frame_i) / sel.k))

    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, todo))
    else:
        values = [one(i) for i in todo]
    out[todo] = values
    return out


def _score_formula(
    sq_sel: np.ndarray, sq_comp: np.ndarray, vals_sel: np.ndarray, vals_comp: np.ndarray, k: int
) -> np.ndarray:
    """(1/K) sum_{j,r} y_j^2 y_r^2 / (gap_jr)^2 from per-observation squared scores."""
    inv_gap_sq = 1.0 / (vals_sel[:, None] - vals_comp[None, :]) ** 2
    return (sq_sel @ inv_gap_sq * sq_comp).sum(axis=1) / k


def approx_influence(
    data: Dataset,
    estimator: str,
    sel: SubspaceSelection,
    *,
    ddof: int = 0,
    gap_tol: Optional[float] = None,
) -> np.ndarray:
    """One-decomposition approximation to the exact leave-one-out influence.

    Fits the estimator once, then evaluates the closed-form span influence of
    each observation with plug-in estimates. For the covariance estimator the
    per-observation value reduces to score products over the full spectrum;
    for correlation and PHD the empirical influence matrix is pushed through
    the generic cross-term formula.
    """
    _check_estimator(estimator)
    n, p = data.n, data.p
    if sel.dim != p:
        raise ValueError(f"selection dim {sel.dim} != data dimension {p}")
    s_idx, c_idx = list(sel.indices), list(sel.complement)
    if not c_idx:
        return np.zeros(n)

    if estimator == "cov":
        xbar, s = sample_mean_cov(data.x, ddof)
        es = eigendecompose(s)
        require_separation(es, sel, gap_tol, context="full-sample fit")
        scores = (data.x - xbar) @ es.vectors
        sq = scores * scores
        return _score_formula(sq[:, s_idx], sq[:, c_idx], es.values[s_idx], es.values[c_idx], sel.k)

    if estimator == "corr":
        model = empirical_correlation_model(data, ddof)
        es = eigendecompose(model.gamma)
        require_separation(es, sel, gap_tol, context="full-sample fit")
        ifms = (if_correlation(model, Contaminant(x=xi)) for xi in data.x)
    else:
        model = empirical_phd_model(data, ddof)
        es = eigendecompose(model.hbar)
        require_separation(es, sel, gap_tol, context="full-sample fit")
        ifms = (
            if_phd(model, Contaminant(x=data.x[i], y=float(data.y[i]))) for i in range(n)
        )

    frame_s, frame_c = es.frame(sel), es.complement_frame(sel)
    inv_gap = 1.0 / (es.values[s_idx][:, None] - es.values[c_idx][None, :])
    out = np.empty(n)
    for i, ifm in enumerate(ifms):
        cross = (frame_s.T @ ifm @ frame_c) * inv_gap
        out[i] = float(np.sum(cross * cross)) / sel.k
    return out


def shortcut_influence(
    data: Dataset,
    sel: SubspaceSelection,
    *,
    ddof: int = 0,
    gap_tol: Optional[float] = None,
) -> np.ndarray:
    """Rank-bound shortcut for the covariance approximation, computed in the
    dual Gram space.

    Scores beyond the covariance rank bound n-1 vanish for every observation,
    so the cross-position sum can stop there; the values equal
    :func:`approx_influence` for the covariance estimator exactly. Everything
    is computed from the n x n Gram matrix of centered rows; the p x p
    covariance matrix is never formed. Squared scores come directly from the
    Gram eigenpairs: y_ji^2 = divisor * value_j * u_j[i]^2.
    """
    n, p = data.n, data.p
    if sel.dim != p:
        raise ValueError(f"selection dim {sel.dim} != data dimension {p}")
    if max(sel.indices) > n - 3:
        raise ValueError(
            f"selection position {max(sel.indices)} exceeds the covariance rank "
            f"bound for n={n} observations (positions must stay at or below {n - 3})"
        )
    vals, u, _, m = _dual_cov_values(data.x, ddof)
    require_value_separation(vals, sel, gap_tol, context="full-sample fit")
    limit = min(n - 1, p)
    s_idx = list(sel.indices)
    r_idx = [r for r in range(limit) if r not in sel.indices]
    if not r_idx:
        return np.zeros(n)
    sq_sel = (m * vals[s_idx]) * u[:, s_idx] ** 2
    sq_comp = (m * vals[r_idx]) * u[:, r_idx] ** 2
    return _score_formula(sq_sel, sq_comp, vals[s_idx], vals[r_idx], sel.k)


def iteration_counts(n: int, p: int, k: int) -> tuple[int, int]:
    """Inner-loop iteration totals for the full and shortcut approximations.

    The full pass visits, for every observation and every selected position,
    all p - 1 other spectrum positions: n * k * (p - 1) iterations. The
    shortcut visits only complementary positions within the rank bound:
    n * k * (n - 1 - k).
    """
    if not 1 <= k < min(p, n - 1):
        raise ValueError(f"k must satisfy 1 <= k < min(p, n-1) = {min(p, n - 1)}, got {k}")
    return n * k * (p - 1), n * k * (n - 1 - k)


def spearman(a, b) -> float:
    """Spearman rank correlation: Pearson correlation of average-tie ranks."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.size < 2:
        raise ValueError("need at least 2 values")
    ra = rankdata(a) - (a.size + 1) / 2.0
    rb = rankdata(b) - (b.size + 1) / 2.0
    denom = float(np.linalg.norm(ra) * np.linalg.norm(rb))
    if denom == 0.0:
        raise ValueError("zero rank variance; correlation undefined")
    return float(ra @ rb / denom)
