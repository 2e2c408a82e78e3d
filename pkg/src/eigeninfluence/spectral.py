"""Eigen-structure primitives: symmetric eigendecomposition with deterministic
ordering, subspace selections, and span-agreement measures between orthonormal
frames (RV/GCD trace product and Benasseni's coefficient).

All projector traces are computed through K x K cross-Gram matrices; a p x p
projector is never materialized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "Ordering",
    "EigenSystem",
    "SubspaceSelection",
    "GapViolation",
    "SubspaceGapError",
    "symmetrize",
    "eigendecompose",
    "default_gap_tol",
    "check_separation",
    "check_value_separation",
    "require_separation",
    "require_value_separation",
    "trace_product",
    "rv_gcd",
    "benasseni_coefficient",
    "squared_residual_identity",
    "validate_frame",
]


class Ordering(enum.Enum):
    """Eigenvalue ordering conventions."""

    ABSOLUTE_DESCENDING = "absolute-descending"
    DESCENDING = "descending"


def symmetrize(m) -> np.ndarray:
    """Return the exactly symmetric part (m + m.T)/2 of a square matrix.

    Raises ValueError for non-square or non-finite input.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class SubspaceSelection:
    """A subset of eigenvector positions (0-based) within a dim-sized spectrum.

    `indices` are positions into an ordered eigensystem, not variable indices.
    The full span (k == dim) is allowed; every cross-subspace measure is then
    trivially zero because the complement is empty.
    """

    indices: tuple[int, ...]
    dim: int

    def __post_init__(self):
        idx = tuple(sorted({int(i) for i in self.indices}))
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not idx:
            raise ValueError("selection must contain at least one index")
        if idx[0] < 0 or idx[-1] >= self.dim:
            raise ValueError(f"indices {idx} out of range for dim {self.dim}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def leading(cls, k: int, dim: int) -> "SubspaceSelection":
        """The first k positions {0, ..., k-1}."""
        if k < 1:
            raise ValueError("k must be at least 1")
        return cls(tuple(range(k)), dim)

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def complement(self) -> tuple[int, ...]:
        chosen = set(self.indices)
        return tuple(i for i in range(self.dim) if i not in chosen)


@dataclass(frozen=True)
class EigenSystem:
    """Ordered eigenvalues and orthonormal eigenvectors of a symmetric matrix.

    `vectors[:, i]` pairs with `values[i]`. Signs are canonicalized so the
    largest-magnitude entry of each eigenvector is positive (first such entry
    on ties), making decompositions reproducible.
    """

    values: np.ndarray
    vectors: np.ndarray
    ordering: Ordering

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def frame(self, sel: SubspaceSelection) -> np.ndarray:
        """The p x K matrix of eigenvectors at the selected positions."""
        return self.vectors[:, list(sel.indices)]

    def complement_frame(self, sel: SubspaceSelection) -> np.ndarray:
        return self.vectors[:, list(sel.complement)]

    def reconstruct(self) -> np.ndarray:
        """Rebuild the decomposed matrix as sum_i values[i] * v_i v_i^T."""
        return (self.vectors * self.values) @ self.vectors.T


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    # argmax returns the first entry attaining the max, which settles ties
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[lead, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def eigendecompose(m, ordering: Ordering = Ordering.ABSOLUTE_DESCENDING) -> EigenSystem:
    """Eigendecompose a symmetric matrix with a deterministic ordering.

    Under ABSOLUTE_DESCENDING, eigenvalues are sorted by |value| descending;
    ties are broken by signed value descending, then by backend output index.
    Under DESCENDING, sorting is by signed value descending.
    """
    a = symmetrize(m)
    vals, vecs = np.linalg.eigh(a)
    p = vals.shape[0]
    if ordering is Ordering.ABSOLUTE_DESCENDING:
        order = np.lexsort((np.arange(p), -vals, -np.abs(vals)))
    elif ordering is Ordering.DESCENDING:
        order = np.lexsort((np.arange(p), -vals))
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    return EigenSystem(vals[order], _canonical_signs(vecs[:, order]), ordering)


class GapViolation(NamedTuple):
    """The closest eigenvalue pair straddling a selection boundary."""

    j: int
    r: int
    gap: float


class SubspaceGapError(ValueError):
    """A (near-)shared eigenvalue across the selection/complement split."""

    def __init__(self, violation: GapViolation, context: str = ""):
        self.violation = violation
        prefix = f"{context}: " if context else ""
        super().__init__(
            f"{prefix}eigenvalue gap {violation.gap:.3e} between positions "
            f"j={violation.j} (selected) and r={violation.r} (complement) is "
            "too small; cross-subspace influence is undefined"
        )


def default_gap_tol(values: np.ndarray) -> float:
    """Relative gap floor: 1e-8 times the largest absolute eigenvalue."""
    values = np.asarray(values, dtype=float)
    return 1e-8 * float(np.max(np.abs(values))) if values.size else 0.0


def check_value_separation(
    values: np.ndarray, sel: SubspaceSelection, gap_tol: Optional[float] = None
) -> Optional[GapViolation]:
    """Separation check on a bare eigenvalue vector (see check_separation)."""
    values = np.asarray(values, dtype=float)
    if sel.dim != values.shape[0]:
        raise ValueError(f"selection dim {sel.dim} != spectrum length {values.shape[0]}")
    comp = sel.complement
    if not comp:
        return None
    if gap_tol is None:
        gap_tol = default_gap_tol(values)
    sel_vals = values[list(sel.indices)]
    comp_vals = values[list(comp)]
    gaps = np.abs(sel_vals[:, None] - comp_vals[None, :])
    a, b = np.unravel_index(np.argmin(gaps), gaps.shape)
    gap = float(gaps[a, b])
    if gap > gap_tol:
        return None
    return GapViolation(j=sel.indices[a], r=comp[b], gap=gap)


def check_separation(
    es: EigenSystem, sel: SubspaceSelection, gap_tol: Optional[float] = None
) -> Optional[GapViolation]:
    """Check that no eigenvalue is shared across the selection boundary.

    Returns None when every selected/complement eigenvalue pair is separated
    by more than `gap_tol`, else the offending pair. Ties entirely inside the
    selection (or inside the complement) are allowed.
    """
    return check_value_separation(es.values, sel, gap_tol)


def require_separation(
    es: EigenSystem,
    sel: SubspaceSelection,
    gap_tol: Optional[float] = None,
    context: str = "",
) -> None:
    violation = check_separation(es, sel, gap_tol)
    if violation is not None:
        raise SubspaceGapError(violation, context)


def require_value_separation(
    values: np.ndarray,
    sel: SubspaceSelection,
    gap_tol: Optional[float] = None,
    context: str = "",
) -> None:
    violation = check_value_separation(values, sel, gap_tol)
    if violation is not None:
        raise SubspaceGapError(violation, context)


def _as_frame(a) -> np.ndarray:
    f = np.asarray(a, dtype=float)
    if f.ndim != 2:
        raise ValueError(f"frame must be 2-D (columns are vectors), got shape {f.shape}")
    return f


def validate_frame(a, tol: float = 1e-10) -> np.ndarray:
    """Validate that the columns of `a` are orthonormal to `tol`."""
    f = _as_frame(a)
    gram = f.T @ f
    dev = float(np.max(np.abs(gram - np.eye(f.shape[1]))))
    if dev > tol:
        raise ValueError(f"columns are not orthonormal (max Gram deviation {dev:.3e})")
    return f


def trace_product(a, b) -> float:
    """trace(P_A P_B) for the projectors onto span(a) and span(b).

    Equals sum_{i,j} (a_i . b_j)^2, computed from the cross-Gram matrix a^T b.
    Column counts may differ; the row dimension must match.
    """
    fa, fb = _as_frame(a), _as_frame(b)
    if fa.shape[0] != fb.shape[0]:
        raise ValueError(f"dimension mismatch: {fa.shape[0]} vs {fb.shape[0]}")
    cross = fa.T @ fb
    return float(np.sum(cross * cross))


def _check_same_k(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"frames must have equal column counts, got {a.shape[1]} and {b.shape[1]}")


def rv_gcd(a, b) -> float:
    """Normalized span agreement trace(P_A P_B)/K in [0, 1].

    1 for equal spans, 0 for orthogonal spans; symmetric in its arguments.
    """
    fa, fb = _as_frame(a), _as_frame(b)
    _check_same_k(fa, fb)
    return trace_product(fa, fb) / fa.shape[1]


def benasseni_coefficient(a, b) -> float:
    """1 - (1/K) sum_k ||a_k - P_B a_k||, the average-residual span agreement.

    Not symmetric in its arguments in general.
    """
    fa, fb = _as_frame(a), _as_frame(b)
    _check_same_k(fa, fb)
    resid = fa - fb @ (fb.T @ fa)
    return 1.0 - float(np.mean(np.linalg.norm(resid, axis=0)))


def squared_residual_identity(a, b) -> float:
    """1 - (1/K) sum_k ||a_k - P_B a_k||^2; identical to rv_gcd analytically."""
    fa, fb = _as_frame(a), _as_frame(b)
    _check_same_k(fa, fb)
    resid = fa - fb @ (fb.T @ fa)
    return 1.0 - float(np.mean(np.sum(resid * resid, axis=0)))
