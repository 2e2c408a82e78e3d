"""Self-contained verification checks behind the `verify` CLI subcommand.

Each check exercises one family of library invariants on seeded fixtures and
returns (passed, detail). They are intentionally redundant with the unit test
suite so a deployed installation can be validated without the test tree.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .data import Dataset, SyntheticSpec, generate_gaussian
from .influence import Contaminant, CorrelationModel, PhdModel, PopulationModel, if_phd
from .measures import (
    corr_subspace_influence,
    cov_subspace_influence,
    finite_epsilon_influence,
    mahalanobis,
    phd_subspace_influence,
    subspace_influence,
    two_block_closed_form,
)
from .influence import if_correlation, if_covariance
from .sample import approx_influence, exact_loo, iteration_counts, shortcut_influence, spearman
from .spectral import (
    SubspaceSelection,
    benasseni_coefficient,
    eigendecompose,
    rv_gcd,
    squared_residual_identity,
)

__all__ = ["CHECKS", "run_checks", "CheckResult"]

CheckResult = tuple[bool, str]


def _random_frame(rng: np.random.Generator, p: int, k: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((p, k)))
    return q


def _random_spd(rng: np.random.Generator, p: int) -> np.ndarray:
    a = rng.standard_normal((p, p))
    return a @ a.T + 0.5 * p * np.eye(p)


def check_identities(seed: int = 0, **_) -> CheckResult:
    """rv_gcd equals the squared-residual form; self-agreement equals 1."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(3, 12))
        k = int(rng.integers(1, p))
        a, b = _random_frame(rng, p, k), _random_frame(rng, p, k)
        worst = max(worst, abs(rv_gcd(a, b) - squared_residual_identity(a, b)))
        worst = max(worst, abs(rv_gcd(a, b) - rv_gcd(b, a)))
        worst = max(worst, abs(benasseni_coefficient(a, a) - 1.0))
    return worst <= 1e-12, f"max identity deviation {worst:.3e}"


def check_convergence(eps: Sequence[float] = (1e-3, 1e-4, 1e-5), **_) -> CheckResult:
    """The finite-weight probe converges to the limit at first order."""
    model = PopulationModel(mu=np.zeros(3), sigma=np.diag([3.0, 2.0, 1.0]))
    sel = SubspaceSelection.leading(1, 3)
    c = Contaminant(x=np.ones(3))
    es = eigendecompose(model.sigma)
    limit = cov_subspace_influence(model, es, sel, c).value
    errs = [abs(finite_epsilon_influence(model, sel, c, e) / limit - 1.0) for e in eps]
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    expected = [eps[i] / eps[i + 1] for i in range(len(eps) - 1)]
    ok = all(e1 > e2 for e1, e2 in zip(errs, errs[1:])) and all(
        exp / 2 <= r <= exp * 2 for r, exp in zip(ratios, expected)
    )
    seq = ", ".join(f"{r:.2f}" for r in ratios)
    return ok, f"limit {limit:.6g}; error ratios ({seq}) for eps {list(eps)}"


def _phd_fixture(rng: np.random.Generator, p: int, k: int):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    lams = rng.uniform(0.5, 3.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    hbar = (q[:, :k] * lams) @ q[:, :k].T
    b = q[:, :k] @ rng.standard_normal(k)
    pop = PopulationModel(mu=rng.standard_normal(p), sigma=_random_spd(rng, p))
    return PhdModel(hbar=hbar, pop=pop, b_ols=b, ey=float(rng.standard_normal()))


def check_closed_forms(seed: int = 1, trials: int = 100, **_) -> CheckResult:
    """Estimator-specific closed forms agree with the generic matrix path."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        p = int(rng.integers(3, 7))
        k = int(rng.integers(1, p))
        sel = SubspaceSelection.leading(k, p)

        pop = PopulationModel(mu=rng.standard_normal(p), sigma=_random_spd(rng, p))
        c = Contaminant(x=pop.mu + rng.standard_normal(p) * 2.0)
        es = eigendecompose(pop.sigma)
        got = cov_subspace_influence(pop, es, sel, c).value
        want = subspace_influence(es, sel, if_covariance(pop, c)).value
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))

        sig = _random_spd(rng, p)
        d = np.sqrt(np.diag(sig))
        corr = CorrelationModel(gamma=sig / np.outer(d, d), mu=rng.standard_normal(p), sigma_diag=np.diag(sig))
        es = eigendecompose(corr.gamma)
        got = corr_subspace_influence(corr, es, sel, c).value
        want = subspace_influence(es, sel, if_correlation(corr, c)).value
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))

        phd = _phd_fixture(rng, p, k)
        cy = Contaminant(x=phd.pop.mu + rng.standard_normal(p), y=float(rng.standard_normal() * 3))
        es = eigendecompose(phd.hbar)
        got = phd_subspace_influence(phd, es, sel, cy).value
        want = subspace_influence(es, sel, if_phd(phd, cy)).value
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    return worst <= 1e-10, f"max relative deviation {worst:.3e} over {trials} draws per estimator"


def check_two_block(seed: int = 2, **_) -> CheckResult:
    """The two-level closed form matches the covariance formula."""
    model = PopulationModel(mu=np.zeros(3), sigma=np.diag([2.0, 1.0, 1.0]))
    sel = SubspaceSelection.leading(1, 3)
    x = np.array([np.sqrt(2.0), 1.0, 0.0])
    md = mahalanobis(model, x)
    z = x / np.sqrt(np.diag(model.sigma))
    cos_sq = z[0] ** 2 / (z @ z)
    direct = two_block_closed_form(2.0, 1.0, 1, md, cos_sq).value
    es = eigendecompose(model.sigma)
    via_cov = cov_subspace_influence(model, es, sel, Contaminant(x=x)).value
    worst = max(abs(direct - 2.0), abs(via_cov - 2.0))
    if worst > 1e-12:
        return False, f"fixture value deviates from 2 by {worst:.3e}"

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        p = int(rng.integers(3, 9))
        k = int(rng.integers(1, p))
        lam_rest = float(rng.uniform(0.2, 2.0))
        lam_top = lam_rest + float(rng.uniform(0.5, 3.0))
        diag = np.array([lam_top] * k + [lam_rest] * (p - k))
        model = PopulationModel(mu=np.zeros(p), sigma=np.diag(diag))
        x = rng.standard_normal(p)
        z = x / np.sqrt(diag)
        cos_sq = float(np.sum(z[:k] ** 2) / (z @ z))
        direct = two_block_closed_form(lam_top, lam_rest, k, mahalanobis(model, x), cos_sq).value
        sel = SubspaceSelection.leading(k, p)
        via_cov = cov_subspace_influence(model, eigendecompose(model.sigma), sel, Contaminant(x=x)).value
        worst = max(worst, abs(direct - via_cov) / max(abs(via_cov), 1.0))
    return worst <= 1e-10, f"max relative deviation {worst:.3e} over 50 structured draws"


def _gaussian_fixture(n: int, p: int, seed: int, spikes: Sequence[float] = ()) -> Dataset:
    diag = np.ones(p)
    diag[: len(spikes)] = spikes
    spec = SyntheticSpec(n=n, p=p, mu=np.zeros(p), sigma=np.diag(diag), seed=seed)
    return generate_gaussian(spec)


def check_shortcut(seed: int = 3, **_) -> CheckResult:
    """The rank-bound shortcut equals the full approximation elementwise."""
    data = _gaussian_fixture(20, 200, seed, spikes=(16.0, 9.0, 4.0))
    worst = 0.0
    for k in range(1, 6):
        sel = SubspaceSelection.leading(k, data.p)
        a = approx_influence(data, "cov", sel)
        s = shortcut_influence(data, sel)
        worst = max(worst, float(np.max(np.abs(a - s) / np.maximum(np.abs(a), 1.0))))
    return worst <= 1e-10, f"max elementwise deviation {worst:.3e} for k=1..5"


def _brute_force_loo(x: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Naive oracle: full eigendecomposition and materialized projectors."""
    n = x.shape[0]
    k = len(positions)

    def projector(rows: np.ndarray) -> np.ndarray:
        centered = rows - rows.mean(axis=0)
        cov = centered.T @ centered / rows.shape[0]
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(-np.abs(vals))
        v = vecs[:, order[list(positions)]]
        return v @ v.T

    base = projector(x)
    out = np.empty(n)
    for i in range(n):
        pi = projector(np.delete(x, i, axis=0))
        out[i] = (n - 1) ** 2 * (1.0 - np.trace(base @ pi) / k)
    return out


def check_loo_oracle(seed: int = 4, **_) -> CheckResult:
    """Exact leave-one-out agrees with a from-scratch naive recompute."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((8, 3)) @ np.diag([2.0, 1.0, 0.5])
    data = Dataset(x=x)
    sel = SubspaceSelection.leading(1, 3)
    got = exact_loo(data, "cov", sel)
    want = _brute_force_loo(x, sel.indices)
    worst = float(np.max(np.abs(got - want)))
    return worst <= 1e-10, f"max deviation {worst:.3e} (n=8, p=3)"


def check_zero_influence(seed: int = 5, **_) -> CheckResult:
    """Contaminants that leave the selected span untouched score zero."""
    rng = np.random.default_rng(seed)
    p, k = 5, 2
    sel = SubspaceSelection.leading(k, p)
    worst = 0.0

    pop = PopulationModel(mu=rng.standard_normal(p), sigma=_random_spd(rng, p))
    es = eigendecompose(pop.sigma)
    worst = max(worst, cov_subspace_influence(pop, es, sel, Contaminant(x=pop.mu)).value)

    sig = _random_spd(rng, p)
    d = np.sqrt(np.diag(sig))
    corr = CorrelationModel(gamma=sig / np.outer(d, d), mu=rng.standard_normal(p), sigma_diag=np.diag(sig))
    worst = max(
        worst,
        corr_subspace_influence(corr, eigendecompose(corr.gamma), sel, Contaminant(x=corr.mu)).value,
    )

    for frame in (es.frame(sel), es.complement_frame(sel)):
        x = pop.mu + frame @ rng.standard_normal(frame.shape[1])
        worst = max(worst, cov_subspace_influence(pop, es, sel, Contaminant(x=x)).value)

    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    hbar = (q[:, :k] * np.array([2.0, -1.2])) @ q[:, :k].T
    phd = PhdModel(
        hbar=hbar,
        pop=PopulationModel(mu=np.zeros(p), sigma=np.eye(p)),
        b_ols=q[:, :k] @ rng.standard_normal(k),
        ey=0.3,
    )
    es_h = eigendecompose(phd.hbar)
    for y in (0.0, 17.0, 1e4):
        x = es_h.frame(sel) @ rng.standard_normal(k)
        worst = max(worst, phd_subspace_influence(phd, es_h, sel, Contaminant(x=x, y=y)).value)
    return worst <= 1e-12, f"max zero-catalog value {worst:.3e}"


def check_iteration_counts(**_) -> CheckResult:
    """Loop accounting matches the published totals for n=62, p=2000, K=10."""
    full, short = iteration_counts(62, 2000, 10)
    pct = round(100.0 * short / full, 2)
    ok = (full, short) == (1239380, 31620) and pct == 2.55
    return ok, f"full={full}, shortcut={short} ({pct}% of full)"


def check_detection(seed: int = 6, **_) -> CheckResult:
    """Exact and shortcut methods rank observations consistently."""
    data = _gaussian_fixture(40, 200, seed, spikes=(25.0, 16.0, 9.0))
    lows = []
    for k in (1, 2, 3):
        sel = SubspaceSelection.leading(k, data.p)
        sr = spearman(exact_loo(data, "cov", sel), shortcut_influence(data, sel))
        lows.append(sr)
    return min(lows) >= 0.9, "spearman by k: " + ", ".join(f"{s:.4f}" for s in lows)


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "identities": check_identities,
    "convergence": check_convergence,
    "closed-forms": check_closed_forms,
    "two-block": check_two_block,
    "shortcut": check_shortcut,
    "loo-oracle": check_loo_oracle,
    "zero-influence": check_zero_influence,
    "iteration-counts": check_iteration_counts,
    "detection": check_detection,
}


def run_checks(
    names: Optional[Iterable[str]] = None,
    eps: Sequence[float] = (1e-3, 1e-4, 1e-5),
    seed: Optional[int] = None,
) -> list[tuple[str, bool, str]]:
    """Run the named checks (all by default) and collect their results."""
    selected = list(CHECKS) if names is None else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check(s) {unknown}; available: {sorted(CHECKS)}")
    results = []
    for name in selected:
        kwargs: dict = {"eps": eps}
        if seed is not None:
            kwargs["seed"] = seed
        passed, detail = CHECKS[name](**kwargs)
        results.append((name, passed, detail))
    return results
